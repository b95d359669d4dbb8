"""
Bivariate polynomials over the Gaussian rationals (exact mode) or the
complex floats (float mode), their derivatives, shifts, discriminants and
the degenerate points where the curve P(x, y) = 0 is ramified or
singular.
"""


__all__ = [
    'BivarPoly',
    'critical_values',
    'degenerate_points',
    'discriminant_scalar',
    'discriminant_y',
    'fiber_roots',
    'resultant_y',
    'ScalarDiscriminant',
    'sylvester_matrix',
    'univariate_roots',
    'X',
    'Y'
]


import logging
import math
from collections import namedtuple
from functools import lru_cache
from numbers import Integral
from tokenize import TokenError

import mpmath
import numpy as np
import sympy
from numpy.polynomial import polynomial as npoly
from sympy.parsing.sympy_parser import (
    parse_expr,
    standard_transformations,
    convert_xor
)

from curvint import config
from curvint.core.exceptions import (
    CurveInputError,
    DegenerateInputError,
    EvaluationError,
    PrecisionEscalationError
)


logger = logging.getLogger(__name__)

X, Y = sympy.symbols('x y')

ScalarDiscriminant = namedtuple('ScalarDiscriminant', ['value', 'generic'])


def _to_exact(value):
    """
    Convert `value` to a canonical sympy Gaussian rational.

    Raises
    ------
    TypeError
        If `value` is a float or isn't a Gaussian rational.
    """
    if isinstance(value, (float, complex, np.inexact)):
        raise TypeError(f"{value!r} is not exact")
    try:
        value = sympy.expand(sympy.sympify(value))
    except (sympy.SympifyError, TypeError) as e:
        raise TypeError(str(e)) from e
    re, im = value.as_real_imag()
    if not (re.is_Rational and im.is_Rational):
        raise TypeError(f"{value!r} is not a Gaussian rational")
    return re + sympy.I * im


def _is_exact(value):
    try:
        _to_exact(value)
    except TypeError:
        return False
    return True


def _to_complex(value):
    try:
        return complex(value)
    except TypeError as e:
        raise CurveInputError(
            f"coefficient {value!r} does not evaluate to a number"
        ) from e


def _root_key(z):
    return (round(z.real, 9), round(z.imag, 9))


class BivarPoly:
    """
    An immutable bivariate polynomial Σ P_ij x^i y^j.

    Coefficients are stored sparsely in a `dict` mapping lattice points
    `(i, j)` to nonzero coefficients. In exact mode every coefficient is
    a sympy Gaussian rational; in float mode every coefficient is a
    Python `complex`. Operations that mix the two modes produce float
    polynomials.

    Parameters
    ----------
    coeffs : dict, optional
        Mapping of `(i, j)` exponent pairs to coefficients. Zero
        coefficients are dropped.
    exact : bool, optional
        Force exact (`True`) or float (`False`) mode. By default, the
        polynomial is exact if all coefficients are Gaussian rationals.
    """

    __slots__ = ('_coeffs', '_exact', '_hash', '_array')

    def __init__(self, coeffs=None, exact=None):
        raw = {}
        for key, value in dict(coeffs or {}).items():
            try:
                i, j = key
            except (TypeError, ValueError) as e:
                raise CurveInputError(f"invalid exponent pair {key!r}") from e
            if (
                    not isinstance(i, Integral) or not isinstance(j, Integral)
                    or i < 0 or j < 0
            ):
                raise CurveInputError(f"invalid exponent pair {key!r}")
            raw[(int(i), int(j))] = value
        if exact is None:
            exact = all(_is_exact(c) for c in raw.values())
        store = {}
        for key, value in raw.items():
            if exact:
                try:
                    value = _to_exact(value)
                except TypeError as e:
                    raise CurveInputError(
                        f"coefficient of x^{key[0]} y^{key[1]} is not a "
                        f"Gaussian rational: {value!r}"
                    ) from e
            else:
                value = _to_complex(value)
            if value != 0:
                store[key] = value
        self._coeffs = dict(sorted(store.items()))
        self._exact = bool(exact)
        self._hash = None
        self._array = None

    ########################################
    #         CONSTRUCTORS & VIEWS         #
    ########################################
    @classmethod
    def from_expr(cls, expr, x=X, y=Y, exact=None):
        """Build a polynomial from a sympy expression in `x` and `y`."""
        try:
            poly = sympy.Poly(sympy.expand(sympy.sympify(expr)), x, y)
        except sympy.PolynomialError as e:
            raise CurveInputError(f"not a polynomial in x, y: {e}") from e
        coeffs = {}
        for (i, j), c in poly.terms():
            if c.free_symbols:
                raise CurveInputError(
                    f"unresolved symbols {sorted(map(str, c.free_symbols))} "
                    f"in coefficient of x^{i} y^{j}"
                )
            coeffs[(i, j)] = c
        return cls(coeffs, exact=exact)

    @classmethod
    def parse(cls, text, params=None, exact=None):
        """
        Parse a polynomial written in Python/sympy syntax.

        Parameters
        ----------
        text : str
            The polynomial, e.g. `'y**2 - (1 - x**2)*(1 - k**2*x**2)'`.
            `^` is accepted as exponentiation.
        params : dict, optional
            Values substituted for named parameters appearing in `text`.
        exact : bool, optional
            Passed to the constructor.

        Raises
        ------
        core.exceptions.CurveInputError
            If `text` can't be parsed or doesn't define a polynomial.
        """
        local_dict = {'x': X, 'y': Y, 'I': sympy.I}
        for name, value in (params or {}).items():
            local_dict[name] = _param_value(name, value)
        try:
            expr = parse_expr(
                text,
                local_dict=local_dict,
                transformations=standard_transformations + (convert_xor,)
            )
        except SyntaxError as e:
            offset = None if e.offset is None else e.offset - 1
            raise CurveInputError(f"cannot parse {text!r}: {e.msg}",
                                  position=offset) from e
        except (TokenError, sympy.SympifyError, TypeError) as e:
            raise CurveInputError(f"cannot parse {text!r}: {e}") from e
        return cls.from_expr(expr, exact=exact)

    def to_expr(self, x=X, y=Y):
        """Return the polynomial as a sympy expression."""
        return sympy.Add(*(
            sympy.sympify(c) * x**i * y**j
            for (i, j), c in self._coeffs.items()
        ))

    def numeric(self):
        """Return a float-mode copy."""
        if not self._exact:
            return self
        return BivarPoly(self._coeffs, exact=False)

    def as_array(self):
        """
        Return the coefficients as a complex array `c` of shape
        `(degx + 1, degy + 1)` with `c[i, j] = P_ij`.
        """
        if self._array is None:
            arr = np.zeros((self.degx + 1, self.degy + 1), dtype=complex)
            for (i, j), c in self._coeffs.items():
                arr[i, j] = complex(c)
            arr.setflags(write=False)
            self._array = arr
        return self._array

    ########################################
    #              PROPERTIES              #
    ########################################
    @property
    def coefficients(self):
        return dict(self._coeffs)

    @property
    def exact(self):
        return self._exact

    @property
    def support(self):
        return tuple(self._coeffs)

    @property
    def degx(self):
        return max((i for i, _ in self._coeffs), default=0)

    @property
    def degy(self):
        return max((j for _, j in self._coeffs), default=0)

    @property
    def degtotal(self):
        return max((i + j for i, j in self._coeffs), default=0)

    def is_zero(self):
        return not self._coeffs

    def scale(self):
        """Largest coefficient modulus (1 for the zero polynomial)."""
        if not self._coeffs:
            return 1.0
        return max(abs(complex(c)) for c in self._coeffs.values())

    def __getitem__(self, key):
        return self._coeffs.get(tuple(key), sympy.S.Zero if self._exact else 0j)

    def items(self):
        return self._coeffs.items()

    def __len__(self):
        return len(self._coeffs)

    ########################################
    #              ARITHMETIC              #
    ########################################
    def _coerce(self, other):
        if isinstance(other, BivarPoly):
            return other
        return BivarPoly({(0, 0): other})

    def __add__(self, other):
        other = self._coerce(other)
        exact = self._exact and other._exact
        out = dict(self._coeffs if exact else self.numeric()._coeffs)
        for key, c in (other._coeffs if exact else other.numeric()._coeffs).items():
            out[key] = out.get(key, 0) + c
        return BivarPoly(out, exact=exact)

    __radd__ = __add__

    def __neg__(self):
        return BivarPoly({k: -c for k, c in self._coeffs.items()},
                         exact=self._exact)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        exact = self._exact and other._exact
        lhs = self if exact else self.numeric()
        rhs = other if exact else other.numeric()
        out = {}
        for (i1, j1), c1 in lhs._coeffs.items():
            for (i2, j2), c2 in rhs._coeffs.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return BivarPoly(out, exact=exact)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, Integral) or n < 0:
            return NotImplemented
        result = BivarPoly({(0, 0): 1}, exact=self._exact)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, BivarPoly):
            return NotImplemented
        return self._exact == other._exact and self._coeffs == other._coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._exact, tuple(self._coeffs.items())))
        return self._hash

    def __repr__(self):
        mode = 'exact' if self._exact else 'float'
        return f"BivarPoly({self.to_expr()}, {mode})"

    ########################################
    #         CALCULUS & EVALUATION        #
    ########################################
    def eval(self, x, y):
        """
        Evaluate the polynomial at `(x, y)`.

        Parameters
        ----------
        x, y : complex or array_like
            Evaluation points; arrays are broadcast against each other.

        Returns
        -------
        complex or numpy.ndarray
            Σ P_ij x^i y^j, evaluated with Horner's scheme in each
            variable.

        Raises
        ------
        core.exceptions.EvaluationError
            If the result is not finite.
        """
        scalar = np.isscalar(x) and np.isscalar(y)
        x, y = np.broadcast_arrays(np.asarray(x, dtype=complex),
                                   np.asarray(y, dtype=complex))
        with np.errstate(over='ignore', invalid='ignore'):
            value = npoly.polyval2d(x, y, self.as_array())
        if not np.all(np.isfinite(value)):
            raise EvaluationError(
                f"non-finite value evaluating {self!r}"
            )
        if scalar:
            return complex(value)
        return value

    __call__ = eval

    def partial(self, var, order=1):
        """
        Partial derivative of the given `order` with respect to `var`
        (`'x'` or `'y'`).
        """
        if var not in ('x', 'y'):
            raise ValueError(f"var must be 'x' or 'y', not {var!r}")
        if order < 0:
            raise ValueError("order must be non-negative")
        out = {}
        for (i, j), c in self._coeffs.items():
            if var == 'x':
                if i >= order:
                    out[(i - order, j)] = c * math.perm(i, order)
            elif j >= order:
                out[(i, j - order)] = c * math.perm(j, order)
        return BivarPoly(out, exact=self._exact)

    def shift(self, x0, y0):
        """
        Return P(x0 + x, y0 + y), re-expanded with binomial
        coefficients. Exact when the polynomial and both shifts are
        exact.
        """
        exact = self._exact and _is_exact(x0) and _is_exact(y0)
        if exact:
            x0, y0 = _to_exact(x0), _to_exact(y0)
            coeffs = self._coeffs
        else:
            x0, y0 = complex(x0), complex(y0)
            coeffs = self.numeric()._coeffs
        out = {}
        for (i, j), c in coeffs.items():
            for a in range(i + 1):
                cx = c * math.comb(i, a) * x0**(i - a)
                for b in range(j + 1):
                    key = (a, b)
                    out[key] = out.get(key, 0) + cx * math.comb(j, b) * y0**(j - b)
        return BivarPoly(out, exact=exact)

    def coeff_y(self, j):
        """Return P_j(x), the coefficient of y^j, as a polynomial in x."""
        return BivarPoly({(i, 0): c for (i, jj), c in self._coeffs.items()
                          if jj == j}, exact=self._exact)

    def leading_x(self):
        """Return P_d(x) with d = deg_y P."""
        return self.coeff_y(self.degy)

    def x_coefficients(self, j):
        """Coefficients of P_j(x), lowest degree first, as complex."""
        return self.as_array()[:, j]

    def y_values(self, x):
        """
        Coefficients of P(x, ·) for each x in `x`, as an array of shape
        `x.shape + (degy + 1,)`, lowest power of y first.
        """
        x = np.asarray(x, dtype=complex)
        arr = self.as_array()
        return np.stack([npoly.polyval(x, arr[:, j])
                         for j in range(arr.shape[1])], axis=-1)

    def univariate_x(self):
        """The polynomial as a sympy `Poly` in x (requires deg_y P = 0)."""
        if self.degy:
            raise ValueError("polynomial depends on y")
        return sympy.Poly(self.to_expr(), X)


def _param_value(name, value):
    if isinstance(value, str):
        try:
            return sympy.sympify(value, rational=True)
        except sympy.SympifyError as e:
            raise CurveInputError(f"invalid value for parameter {name!r}: "
                                  f"{value!r}") from e
    if isinstance(value, float):
        return sympy.Float(value)
    return sympy.sympify(value)


########################################
#            DISCRIMINANTS             #
########################################
def sylvester_matrix(coeffs):
    """
    The (2d−1)×(2d−1) matrix whose determinant is the discriminant.

    Parameters
    ----------
    coeffs : sequence
        `[P_d, P_{d-1}, ..., P_0]`, elements of any ring.

    Returns
    -------
    list of list
        d−1 rows holding shifted copies of (P_d, ..., P_0) followed by d
        rows holding shifted copies of (d·P_d, ..., 1·P_1). Columns are
        indexed by powers y^{2d−2}, ..., y^0.
    """
    d = len(coeffs) - 1
    size = 2 * d - 1
    rows = []
    for r in range(d - 1):
        row = [0] * size
        for c, value in enumerate(coeffs):
            row[r + c] = value
        rows.append(row)
    derivative = [(d - c) * value for c, value in enumerate(coeffs[:-1])]
    for r in range(d):
        row = [0] * size
        for c, value in enumerate(derivative):
            row[r + c] = value
        rows.append(row)
    return rows


@lru_cache(maxsize=128)
def discriminant_y(P):
    """
    Discriminant of P with respect to y, as a polynomial in x.

    Parameters
    ----------
    P : BivarPoly
        The curve. Must depend on y.

    Returns
    -------
    sympy.Poly
        Δ(x), with an exact coefficient domain in exact mode.

    Raises
    ------
    core.exceptions.DegenerateInputError
        If deg_y P = 0 or Δ(x) vanishes identically (P has a repeated
        factor).
    """
    d = P.degy
    if d == 0 or P.is_zero():
        raise DegenerateInputError("polynomial does not depend on y")
    coeffs = [P.coeff_y(j).to_expr() for j in range(d, -1, -1)]
    matrix = sympy.Matrix(sylvester_matrix(coeffs))
    det = sympy.expand(matrix.det(method='berkowitz'))
    delta = sympy.Poly(det, X)
    if delta.is_zero:
        raise DegenerateInputError(
            "discriminant vanishes identically (P has a repeated factor)"
        )
    logger.debug("discriminant of %r has degree %d", P, delta.degree())
    return delta


def discriminant_scalar(P):
    """
    The scalar discriminant Δ = Discr_x Δ(x).

    Returns
    -------
    ScalarDiscriminant
        `(value, generic)`. When Δ(x) is constant, `value` is `None` and
        the curve is reported as generic (no finite branch points).
    """
    delta = discriminant_y(P)
    if delta.degree() <= 0:
        return ScalarDiscriminant(None, True)
    expr = delta.as_expr()
    value = sympy.resultant(expr, sympy.diff(expr, X), X) / delta.LC()
    if P.exact:
        value = _to_exact(value)
        generic = value != 0
    else:
        value = complex(value)
        scale = max(abs(complex(c)) for c in delta.all_coeffs())
        generic = abs(value) > config.rank_tol * scale ** (2 * delta.degree() - 1)
    return ScalarDiscriminant(value, bool(generic))


def resultant_y(P, Q):
    """Resultant of `P` and `Q` with respect to y, as a sympy `Poly` in x."""
    exact = P.exact and Q.exact
    res = sympy.resultant(P.to_expr(), Q.to_expr(), Y)
    if not exact:
        res = sympy.N(res)
    return sympy.Poly(sympy.expand(res), X)


########################################
#               ROOTS                  #
########################################
def _mpc(value):
    value = sympy.sympify(value)
    re, im = value.as_real_imag()
    parts = []
    for part in (re, im):
        if part.is_Rational:
            parts.append(mpmath.mpf(int(part.p)) / int(part.q))
        else:
            parts.append(mpmath.mpf(str(sympy.N(part, config.precision + 5))))
    return mpmath.mpc(*parts)


def _numeric_roots(coeffs):
    """
    Roots of a univariate polynomial given highest degree first.

    Companion-matrix eigenvalues polished by Newton iteration at double
    precision; above 15 digits, mpmath's simultaneous iteration at the
    working precision.
    """
    values = np.array([complex(c) for c in coeffs], dtype=complex)
    if not values.size or not np.any(values):
        return []
    scale = np.max(np.abs(values))
    lead = 0
    while abs(values[lead]) <= 1e-14 * scale:
        lead += 1
    coeffs = list(coeffs)[lead:]
    values = values[lead:]
    if values.size <= 1:
        return []
    if config.precision > 15:
        with mpmath.workdps(config.precision + 5):
            try:
                roots = mpmath.polyroots([_mpc(c) for c in coeffs],
                                         maxsteps=200, extraprec=64)
            except mpmath.libmp.NoConvergence as e:
                raise PrecisionEscalationError(
                    "extended-precision root finding did not converge"
                ) from e
            return [complex(r) for r in roots]
    roots = np.roots(values)
    deriv = np.polyder(values)
    for _ in range(3):
        dv = np.polyval(deriv, roots)
        ok = np.abs(dv) > 1e-300
        step = np.zeros(roots.shape, dtype=complex)
        step[ok] = np.polyval(values, roots[ok]) / dv[ok]
        # only accept steps that don't throw a root far away
        small = np.abs(step) < 1e-3 * np.maximum(1.0, np.abs(roots))
        roots = np.where(small, roots - step, roots)
    return list(roots)


def _cluster(roots):
    radius = math.sqrt(config.root_tol)
    clusters = []
    for r in roots:
        for cluster in clusters:
            center = np.mean(cluster)
            if abs(r - center) < radius * max(1.0, abs(center)):
                cluster.append(r)
                break
        else:
            clusters.append([r])
    return [(complex(np.mean(c)), len(c)) for c in clusters]


def univariate_roots(poly):
    """
    Distinct roots of a univariate polynomial with their multiplicities.

    Parameters
    ----------
    poly : sympy.Poly or sequence of complex
        Either a sympy `Poly` or a coefficient sequence, highest degree
        first. Exact polynomials get their multiplicities from a
        square-free factorization; float polynomials from clustering.

    Returns
    -------
    list of tuple of (complex, int)
        Sorted by (real, imaginary) part.
    """
    if isinstance(poly, sympy.Poly):
        if poly.degree() <= 0:
            return []
        if poly.domain.is_Exact:
            out = []
            for factor, mult in poly.sqf_list()[1]:
                out.extend((r, mult)
                           for r in _numeric_roots(factor.all_coeffs()))
            return sorted(out, key=lambda rm: _root_key(rm[0]))
        coeffs = poly.all_coeffs()
    else:
        coeffs = list(poly)
    out = _cluster(_numeric_roots(coeffs))
    return sorted(out, key=lambda rm: _root_key(rm[0]))


def fiber_roots(P, x):
    """Roots in y of P(x, y) for a single x (unsorted, unpolished)."""
    coeffs = P.numeric().y_values(complex(x))
    return _numeric_roots(coeffs[::-1])


def _scale_at(P, x, y):
    """Σ |P_ij| |x|^i |y|^j, the natural size of P's terms at (x, y)."""
    arr = np.abs(P.as_array())
    return float(npoly.polyval2d(abs(x), abs(y), arr))


def _polish_singular(Pn, x, y):
    """Newton iteration on the system P = P_y = 0 in (x, y)."""
    Px, Py = Pn.partial('x'), Pn.partial('y')
    Pxy, Pyy = Py.partial('x'), Py.partial('y')
    for _ in range(8):
        jac = np.array([[Px(x, y), Py(x, y)], [Pxy(x, y), Pyy(x, y)]])
        if np.linalg.cond(jac) > 1e8:
            break
        rhs = np.array([Pn(x, y), Py(x, y)])
        dx, dy = np.linalg.solve(jac, rhs)
        x, y = x - dx, y - dy
        if abs(dx) + abs(dy) < 1e-15 * (1 + abs(x) + abs(y)):
            break
    return x, y


def _common_roots(Pn, Py, xb):
    """Values y with P(xb, y) = P_y(xb, y) = 0."""
    d = Pn.degy
    coeffs = Pn.y_values(xb)[::-1]
    if d >= 2:
        matrix = np.array(sylvester_matrix(list(coeffs)), dtype=complex)
        _, s, vh = np.linalg.svd(matrix)
        nullity = int(np.sum(s <= config.rank_tol * s[0]))
        if nullity == 1:
            v = vh[-1].conj()
            if abs(v[-1]) > config.rank_tol * np.max(np.abs(v)):
                logger.debug("null vector gives degenerate point at x=%s",
                             xb)
                return [v[-2] / v[-1]]
    candidates = []
    for y in _numeric_roots(coeffs):
        scale = max(1.0, _scale_at(Py, xb, y))
        if abs(Py(xb, y)) < math.sqrt(config.root_tol) * scale:
            if all(abs(y - c) > math.sqrt(config.root_tol) for c in candidates):
                candidates.append(y)
    return candidates


def degenerate_points(P):
    """
    Solutions (x_β, y_β) of P = P_y = 0.

    For each root x_β of Δ(x), y_β is read off the null vector of the
    discriminant matrix at x_β when its null space is one-dimensional
    (a ratio of minors), and otherwise from the roots of P(x_β, ·) where
    P_y vanishes. Over a root of P_d(x) the degeneracy at y = ∞ is left
    to the punctures; only finite points of that fiber are reported.

    Returns
    -------
    list of tuple of (complex, complex)

    Raises
    ------
    core.exceptions.PrecisionEscalationError
        If a point fails the residual check at the working precision.
    """
    delta = discriminant_y(P)
    Pn = P.numeric()
    Py = Pn.partial('y')
    lead = Pn.leading_x()
    tol = math.sqrt(config.root_tol)
    points = []
    for xb, _ in univariate_roots(delta):
        if abs(lead(xb, 0)) <= config.root_tol * max(1.0, _scale_at(lead, xb, 0)):
            logger.debug("root x=%s of P_d: degenerate point at infinity", xb)
        for yb in _common_roots(Pn, Py, xb):
            x, y = _polish_singular(Pn, xb, yb)
            scale = max(1.0, _scale_at(Pn, x, y))
            if abs(Pn(x, y)) > tol * scale or abs(Py(x, y)) > tol * scale:
                raise PrecisionEscalationError(
                    f"degenerate point near ({x:.6g}, {y:.6g}) fails the "
                    f"residual check at {config.precision} digits"
                )
            points.append((complex(x), complex(y)))
    points.sort(key=lambda p: (_root_key(p[0]), _root_key(p[1])))
    logger.info("found %d degenerate points", len(points))
    return points


def critical_values(P):
    """
    The x-values over which the fiber of P degenerates: roots of Δ(x)
    and of P_d(x), merged and sorted.

    Returns
    -------
    tuple of complex
    """
    return _critical_values(P, config.root_tol, config.precision)


@lru_cache(maxsize=128)
def _critical_values(P, root_tol, precision):
    values = [r for r, _ in univariate_roots(discriminant_y(P))]
    lead = P.leading_x()
    if lead.degx > 0:
        values.extend(r for r, _ in univariate_roots(lead.univariate_x()))
    merged = []
    for v in sorted(values, key=_root_key):
        if all(abs(v - u) > math.sqrt(root_tol) * max(1.0, abs(u))
               for u in merged):
            merged.append(complex(v))
    return tuple(merged)
