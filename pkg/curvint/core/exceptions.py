"""curvint-specific exception and warning classes."""


__all__ = [
    'CurvintError',
    'CurvintConfigError',
    'CurveInputError',
    'CliArgumentError',
    'DegenerateInputError',
    'UnsupportedShapeError',
    'NumericalError',
    'PrecisionEscalationError',
    'PathTooCloseError',
    'QuadratureError',
    'EvaluationError',
    'CycleSetError',
    'FundamentalDomainError',
    'PoleSubtractionError',
    'CrossCheckError',
    'CurvintWarning',
    'EXIT_OK',
    'EXIT_INPUT',
    'EXIT_NUMERIC',
    'EXIT_CROSSCHECK'
]


from argparse import ArgumentError


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_CROSSCHECK = 4


class CurvintError(Exception):
    """Base class for all `curvint` library exceptions."""

    exit_code = EXIT_INPUT


class CurvintWarning(UserWarning):
    """
    Category for numeric-quality issues that don't stop a computation
    (symmetry residuals, cross-check disagreements, truncation notes).
    """


class CurvintConfigError(CurvintError):
    """Class for errors related to the `curvint.config` object."""

    def __init__(self, field, msg):
        """
        Parameters
        ----------
        field : str
            The config field about which the exception should be raised
        msg : str
            The specific error message
        """
        self.field = field
        self.msg = msg
        super().__init__(f"'curvint.config.{field}': {msg}")


class CurveInputError(CurvintError):
    """
    Class for malformed user input: curve, job, cycle, form and gamma
    documents.
    """

    def __init__(self, msg, position=None):
        """
        Parameters
        ----------
        msg : str
            The error message to be displayed.
        position : str or int, optional
            Where in the input the problem was found. Either a JSON path
            (e.g., `'curve.monomials[2].coeff'`) or a 0-indexed character
            offset into an expression string.
        """
        self.msg = msg
        self.position = position
        if position is not None:
            msg = f"{msg} (at {position})"
        super().__init__(msg)


class CliArgumentError(ArgumentError, CurveInputError):
    """
    Class for errors raised while parsing command line arguments.

    Raised by `curvint.core.parsers.CurvintParser` in place of printing
    usage and exiting, so that `curvint.cli.main` can map it to an exit
    code.
    """

    def __init__(self, msg, argument=None):
        """
        Parameters
        ----------
        msg : str
            The error message to be displayed.
        argument : str, optional
            The option responsible for the error. If `None` (default),
            it is read from `msg` when that has the form of an
            `argparse.ArgumentError` message ("argument --x: ...").
        """
        if argument is None and msg.startswith('argument '):
            split_msg = msg.split()
            argument = split_msg[1].rstrip(':')
            msg = ' '.join(split_msg[2:])
        # ArgumentError.__init__ expects an Action, not a name
        ArgumentError.__init__(self, argument=None, message=msg)
        self.argument_name = argument
        self.msg = msg
        self.position = argument

    def __str__(self):
        return ArgumentError.__str__(self)


class DegenerateInputError(CurvintError):
    """
    Class for inputs that are well-formed but degenerate for the
    requested operation (e.g., a polynomial without `y`, a side
    polynomial with a multiple root).
    """


class UnsupportedShapeError(CurvintError):
    """
    Class for curves outside the family an operation is implemented for
    (e.g., a non-hyperelliptic curve passed to a hyperelliptic
    construction).
    """


class NumericalError(CurvintError):
    """Base class for failures of a numerical procedure."""

    exit_code = EXIT_NUMERIC


class PrecisionEscalationError(NumericalError):
    """
    Raised when a numeric decision (rank, root multiplicity, null-space
    extraction) can't be made reliably at the working precision.
    """


class PathTooCloseError(NumericalError):
    """
    Raised when sheet tracking can't separate the fiber near a critical
    x-value.
    """

    def __init__(self, x, msg=None):
        """
        Parameters
        ----------
        x : complex
            The x-value where tracking failed.
        msg : str, optional
            Additional context.
        """
        self.x = complex(x)
        message = f"cannot separate sheets near x = {self.x:.6g}"
        if msg is not None:
            message = f"{message}: {msg}"
        super().__init__(message)


class QuadratureError(NumericalError):
    """Raised when adaptive quadrature fails to converge."""


class EvaluationError(NumericalError):
    """Raised when an evaluation produces a non-finite value."""


class CycleSetError(CurvintError):
    """
    Class for invalid cycle data: loops that don't close on their
    starting sheet, winding checks that fail, non-symplectic changes of
    basis or contours outside the marked basis.
    """

    exit_code = EXIT_NUMERIC


class FundamentalDomainError(CurvintError):
    """Raised when an integration path crosses a marked loop."""

    exit_code = EXIT_NUMERIC


class PoleSubtractionError(NumericalError):
    """
    Raised when the residual of a decomposition isn't holomorphic, i.e.
    when subtracting the singular parts left a pole behind.
    """

    def __init__(self, msg, pole=None, order=None):
        """
        Parameters
        ----------
        msg : str
            The error message to be displayed.
        pole : str, optional
            Label of the pole whose subtraction failed.
        order : int, optional
            Order of the offending singular term.
        """
        self.pole = pole
        self.order = order
        if pole is not None:
            msg = f"{msg} (pole {pole!r}, order {order})"
        super().__init__(msg)


class CrossCheckError(CurvintError):
    """Raised when a requested cross-check exceeds its tolerance."""

    exit_code = EXIT_CROSSCHECK

    def __init__(self, name, value, reference, tol):
        self.name = name
        self.value = value
        self.reference = reference
        self.tol = tol
        super().__init__(
            f"cross-check {name!r} failed: {value!r} vs {reference!r} "
            f"(tolerance {tol:g})"
        )
