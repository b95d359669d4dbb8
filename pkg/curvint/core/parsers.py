"""
Command line parser and input document loaders.

This module defines `curvint`'s command line parser (`curvint_parser`),
whose errors are raised as `CliArgumentError`s instead of exiting, and
the loaders that turn curve, job, cycle, form, arc and loop-combination
inputs into the objects the pipeline works with. Every loader reports
problems as a `CurveInputError` carrying the JSON path (or character
offset) where it found them.
"""


__all__ = [
    'curvint_parser',
    'CurvintParser',
    'JobSpec',
    'load_arc',
    'load_curve',
    'load_cycles',
    'load_form',
    'load_job',
    'parse_gamma',
    'read_json',
    'SubtractAction'
]


import json
import sys
from argparse import Action, ArgumentError, ArgumentParser, ArgumentTypeError
from dataclasses import dataclass, field
from pathlib import Path

import sympy

from curvint.algebra import BivarPoly, X, Y
from curvint.core.exceptions import CliArgumentError, CurveInputError
from curvint.core.regexps import gamma_regex, gamma_term_regex
from curvint.forms import RationalOneForm
from curvint.surface import CycleSet, PathSpec


class CurvintParser(ArgumentParser):
    """
    `argparse.ArgumentParser` subclass for the `curvint` command line.

    Errors that `argparse` would normally report by printing usage and
    exiting with status 2 are raised as `CliArgumentError`s instead, so
    `curvint.cli.main` maps every input problem to an exit code in one
    place. Unrecognized arguments are rejected the same way.
    """

    # pylint: disable=signature-differs
    def parse_args(self, args=None, namespace=None):
        try:
            ns, extras = super().parse_known_args(args=args,
                                                  namespace=namespace)
        except (ArgumentError, ArgumentTypeError) as e:
            if isinstance(e, CliArgumentError):
                raise
            if isinstance(e, ArgumentError):
                raise CliArgumentError(msg=e.message,
                                       argument=e.argument_name) from None
            raise CliArgumentError(msg=e.args[0]) from None
        if extras:
            raise CliArgumentError(
                msg=f"Unrecognized arguments: {' '.join(extras)}"
            )
        return ns

    def error(self, message):
        """
        Raise a `CliArgumentError` with a given message.

        Overrides `argparse.ArgumentParser.error()`, which exits the
        program.

        Parameters
        ----------
        message : str
            The error message to be displayed for the raised exception.
        """
        if sys.exc_info()[1] is not None:
            raise    # pylint: disable=misplaced-bare-raise
        raise CliArgumentError(msg=message)


class SubtractAction(Action):
    """
    `argparse.Action` subclass for subtracting from an attribute.

    The inverse of the built-in `'count'` action: each occurrence of the
    option subtracts 1 from `dest`. Giving `-v/--verbose` the `'count'`
    action and `-q/--quiet` this one, with a common `dest`, makes the
    verbosity the net value of the two.
    """

    # noinspection PyShadowingBuiltins
    def __init__(
            self,
            option_strings,
            dest,
            default=None,
            required=False,
            help=None
    ):
        super().__init__(option_strings=option_strings, dest=dest, nargs=0,
                         default=default, required=required, help=help)

    def __call__(self, parser, namespace, values, option_string=None):
        curr_count = getattr(namespace, self.dest, 0)
        setattr(namespace, self.dest, curr_count - 1)


########################################
#              JSON INPUTS             #
########################################
def read_json(source, what='document'):
    """
    Load a JSON document from a path, or pass a parsed one through.

    Raises
    ------
    core.exceptions.CurveInputError
        If the file is missing or isn't valid JSON.
    """
    if isinstance(source, (dict, list)):
        return source
    path = Path(source)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise CurveInputError(f"cannot read {what} {str(path)!r}: "
                              f"{e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise CurveInputError(f"{what} {str(path)!r} is not valid JSON: "
                              f"{e.msg}", position=e.pos) from e


def _require(data, key, where):
    if not isinstance(data, dict):
        raise CurveInputError("expected a JSON object", position=where)
    if key not in data:
        raise CurveInputError(f"missing field {key!r}", position=where)
    return data[key]


def _symbols(params, where):
    out = {'x': X, 'y': Y, 'I': sympy.I}
    for name, value in (params or {}).items():
        try:
            out[name] = sympy.sympify(str(value), rational=True)
        except sympy.SympifyError as e:
            raise CurveInputError(f"invalid value {value!r}",
                                  position=f"{where}.params.{name}") from e
    return out


def _coefficient(value, symbols, exact, where):
    if isinstance(value, dict):
        re = _coefficient(_require(value, 're', where), symbols, exact, where + '.re')
        im = _coefficient(value.get('im', '0'), symbols, exact, where + '.im')
        return re + sympy.I * im if exact else re + 1j * im
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise CurveInputError(f"coefficient {value!r} is not a number",
                              position=where)
    try:
        c = sympy.sympify(str(value), locals=symbols, rational=exact)
    except sympy.SympifyError as e:
        raise CurveInputError(f"cannot parse coefficient {value!r}",
                              position=where) from e
    if c.free_symbols:
        raise CurveInputError(
            f"unresolved symbols {sorted(map(str, c.free_symbols))}",
            position=where
        )
    return c if exact else complex(c)


def load_curve(source, where='curve'):
    """
    Build the curve polynomial from a CurveSpec.

    A CurveSpec is a JSON object with either a `"polynomial"` string
    (e.g. `"y**2 - (1 - x**2)*(1 - k**2*x**2)"`) or a `"monomials"` list
    of `{"i": ..., "j": ..., "coeff": ...}` entries; an optional
    `"params"` map of named values (`k`, `t`, `g2`, `g3`, ...); and an
    optional `"field"`, `"exact"` (default) or `"float"`. Exact
    coefficients are rational strings (`"3/4"`, `"0.75"`) or
    `{"re": ..., "im": ...}` pairs of them.

    Parameters
    ----------
    source : dict, str or pathlib.Path
        The CurveSpec or a path to it.
    where : str, optional
        JSON path of the CurveSpec, used in error positions.

    Returns
    -------
    BivarPoly
    """
    data = read_json(source, 'curve')
    mode = data.get('field', 'exact') if isinstance(data, dict) else None
    if mode not in ('exact', 'float'):
        raise CurveInputError(f"unknown field mode {mode!r}",
                              position=f"{where}.field")
    exact = mode == 'exact'
    params = data.get('params', {})
    if 'polynomial' in data:
        if exact:
            params = {k: str(v) for k, v in params.items()}
        try:
            return BivarPoly.parse(str(data['polynomial']), params, exact=exact)
        except CurveInputError as e:
            raise CurveInputError(e.msg, position=f"{where}.polynomial"
                                  + ('' if e.position is None else f"[{e.position}]")) from e
    monomials = _require(data, 'monomials', where)
    if not isinstance(monomials, list) or not monomials:
        raise CurveInputError("expected a nonempty list", position=f"{where}.monomials")
    symbols = _symbols(params, where)
    coeffs = {}
    for n, term in enumerate(monomials):
        here = f"{where}.monomials[{n}]"
        try:
            i, j = int(_require(term, 'i', here)), int(_require(term, 'j', here))
        except (TypeError, ValueError) as e:
            raise CurveInputError("exponents must be integers", position=here) from e
        if i < 0 or j < 0:
            raise CurveInputError("exponents must be nonnegative", position=here)
        c = _coefficient(_require(term, 'coeff', here), symbols, exact, here + '.coeff')
        coeffs[(i, j)] = coeffs.get((i, j), 0) + c
    return BivarPoly(coeffs, exact=exact)


def load_cycles(source, where='cycles'):
    """A `CycleSet` from its JSON form, or `None` for `"auto"`."""
    if source is None or (isinstance(source, str)
                          and source in ('auto', 'auto-hyperelliptic')):
        return None
    data = read_json(source, 'cycle set')
    try:
        return CycleSet.from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise CurveInputError(f"malformed cycle set: {e}", position=where) from e


def load_form(source, params=None, where='form'):
    """A `RationalOneForm` from `{"num": ..., "den": ...}` (den defaults to 1)."""
    data = read_json(source, 'form')
    num = _require(data, 'num', where)
    den = data.get('den', '1')
    params = {k: str(v) for k, v in (params or {}).items()}
    try:
        label = data.get('label')
        return RationalOneForm(BivarPoly.parse(str(num), params),
                               BivarPoly.parse(str(den), params), label=label)
    except CurveInputError as e:
        raise CurveInputError(e.msg, position=where) from e


def load_arc(source, where='arc'):
    """An open `PathSpec` from its JSON form."""
    data = read_json(source, 'arc')
    try:
        arc = PathSpec.from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise CurveInputError(f"malformed arc: {e}", position=where) from e
    if arc.closed or len(arc.waypoints) < 2:
        raise CurveInputError("an arc needs two or more waypoints and must "
                              "not be closed", position=where)
    return arc


def parse_gamma(text):
    """
    Read an integer combination of marked loops.

    Parameters
    ----------
    text : str
        E.g. `'2*A1 - B2 + C[inf0]'`.

    Returns
    -------
    dict
        Loop name → integer coefficient, zero coefficients dropped.

    Raises
    ------
    core.exceptions.CurveInputError
        If `text` isn't such a combination; `position` is the offset of
        the first character that couldn't be read.
    """
    if not isinstance(text, str) or gamma_regex.match(text) is None:
        pos = 0
        if isinstance(text, str):
            while pos < len(text):
                match = gamma_term_regex.match(text, pos)
                if match is None or match.end() == pos or \
                        (pos > 0 and match['SIGN'] is None):
                    break
                pos = match.end()
        raise CurveInputError(f"invalid loop combination {text!r}", position=pos)
    gamma = {}
    for match in gamma_term_regex.finditer(text):
        coeff = int(match['COEFF'] or 1) * (-1 if match['SIGN'] == '-' else 1)
        gamma[match['LOOP']] = gamma.get(match['LOOP'], 0) + coeff
    return {name: c for name, c in gamma.items() if c}


@dataclass
class JobSpec:
    """
    One unit of work for the command line.

    Attributes
    ----------
    curve : BivarPoly
    cycles : CycleSet or None
        `None` selects the default hyperelliptic loops.
    form : RationalOneForm or None
    gamma : dict or None
        Loop combination for complete integrals.
    arc : PathSpec or None
        Open path for incomplete integrals.
    precision, seed : int or None
        Overrides for the config fields of the same names.
    raw : dict
        The curve document as given, kept for fingerprints and echoes.
    """

    curve: BivarPoly
    cycles: CycleSet = None
    form: RationalOneForm = None
    gamma: dict = None
    arc: PathSpec = None
    precision: int = None
    seed: int = None
    raw: dict = field(default_factory=dict, repr=False)


def load_job(source=None, curve=None, cycles=None, form=None, gamma=None,
             arc=None, precision=None, seed=None):
    """
    Assemble a `JobSpec` from a job document and command line overrides.

    A job document is a JSON object with a `"curve"` (CurveSpec or path)
    and optional `"cycles"` (`"auto"`, a CycleSet or a path), `"form"`,
    `"gamma"` (a loop combination string, or `{"arc": PathSpec}`),
    `"precision"` and `"seed"`. Relative paths are resolved against the
    job file's directory. Explicit keyword arguments take precedence
    over the document.

    Raises
    ------
    core.exceptions.CurveInputError
        If no curve is given or a part of the job is malformed.
    """
    data = read_json(source, 'job') if source is not None else {}
    if not isinstance(data, dict):
        raise CurveInputError("a job must be a JSON object", position='job')
    base = Path(source).parent if isinstance(source, (str, Path)) else Path('.')

    def resolve(value):
        if isinstance(value, str) and value not in ('auto', 'auto-hyperelliptic'):
            path = Path(value)
            return path if path.is_absolute() else base / path
        return value

    curve_src = curve if curve is not None else data.get('curve')
    if curve_src is None:
        raise CurveInputError("no curve given (use --curve or a job file)",
                              position='curve')
    curve_doc = read_json(resolve(curve_src) if curve is None else curve_src, 'curve')
    P = load_curve(curve_doc)
    params = curve_doc.get('params', {}) if isinstance(curve_doc, dict) else {}
    cycles_src = cycles if cycles is not None else resolve(data.get('cycles', 'auto'))
    form_src = form if form is not None else resolve(data.get('form'))
    gamma_src = gamma if gamma is not None else data.get('gamma')
    arc_src = arc if arc is not None else None
    if isinstance(gamma_src, dict):
        arc_src = arc_src if arc_src is not None else _require(gamma_src, 'arc', 'gamma')
        gamma_src = None
    return JobSpec(
        curve=P,
        cycles=load_cycles(cycles_src),
        form=None if form_src is None else load_form(form_src, params),
        gamma=None if gamma_src is None else parse_gamma(gamma_src),
        arc=None if arc_src is None else load_arc(resolve(arc_src) if arc is None else arc_src),
        precision=precision if precision is not None else data.get('precision'),
        seed=seed if seed is not None else data.get('seed'),
        raw=curve_doc if isinstance(curve_doc, dict) else {}
    )


########################################
#             CLI PARSER               #
########################################
curvint_parser = CurvintParser(
    prog='curvint',
    description="Integrals of rational 1-forms on plane algebraic curves.",
    add_help=True
)
curvint_parser.add_argument(
    '-v',
    '--verbose',
    action='count',
    dest='verbosity',
    default=0,
    help="Log pipeline milestones (-v) or numeric internals (-vv)."
)
curvint_parser.add_argument(
    '-q',
    '--quiet',
    action=SubtractAction,
    dest='verbosity',
    help="Log errors only."
)
_subparsers = curvint_parser.add_subparsers(dest='command', required=True,
                                            parser_class=CurvintParser)

for _name, _help in (
        ('analyze', "Newton polygon, discriminants, punctures and genus."),
        ('periods', "A- and B-periods, τ and S."),
        ('decompose', "Times and canonical decomposition of a form."),
        ('integrate', "Complete or incomplete integral of a form.")
):
    _sub = _subparsers.add_parser(_name, help=_help)
    _sub.add_argument('--curve', metavar='FILE', help="CurveSpec JSON file.")
    _sub.add_argument('--job', metavar='FILE', help="JobSpec JSON file.")
    _sub.add_argument('--output', metavar='FILE',
                      help="Write the JSON report here instead of stdout.")
    _sub.add_argument('--precision', metavar='N', type=int,
                      help="Working precision in decimal digits.")
    _sub.add_argument('--seed', metavar='N', type=int,
                      help="Seed for origin and collocation points.")
    if _name == 'analyze':
        continue
    _sub.add_argument('--cycles', metavar='FILE|auto',
                      help="CycleSet JSON file, or 'auto' for the default "
                           "hyperelliptic loops.")
    _sub.add_argument('--check', action='store_true', default=None,
                      help="Run cross-checks; exit with status 4 when one "
                           "fails.")
    if _name == 'periods':
        continue
    _sub.add_argument('--form', metavar='FILE',
                      help="Form JSON file: {\"num\": ..., \"den\": ...}.")
    if _name == 'integrate':
        _sub.add_argument('--gamma', metavar='EXPR',
                          help="Loop combination, e.g. '2*A1 - B2 + C[inf0]'.")
        _sub.add_argument('--arc', metavar='FILE',
                          help="Open path JSON file for incomplete integrals.")
