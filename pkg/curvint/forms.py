"""
The algebraic differentials of a curve, built from the coefficients of P
alone:

    - the combinatorial 1-forms Ω_ij = x^i y^j dx / P_y,
    - the triangle polynomial Q^comb and the combinatorial fundamental
      bidifferential B^comb,
    - the combinatorial third-kind form dS^comb,
    - the polynomials C_ij that give the derivatives of ζ,
    - the Schwarzian finite-difference helper.
"""


__all__ = [
    'bergman_comb',
    'bergman_comb_rational',
    'bergman_diagonal',
    'c_poly',
    'CombBidifferential',
    'CPolynomial',
    'ds_comb',
    'ds_comb_rational',
    'omega_comb',
    'puncture_residue',
    'q_comb',
    'q_comb_pair',
    'RationalOneForm',
    'residue_circle',
    'schwarzian'
]


import logging
import math
from functools import lru_cache

import numpy as np
import sympy

from curvint import config
from curvint.algebra import BivarPoly, X, Y
from curvint.core.exceptions import DegenerateInputError
from curvint.polygon import build_newton, form_kind, locate, pole_order
from curvint.series import LocalChart


logger = logging.getLogger(__name__)

X1, Y1, X2, Y2 = sympy.symbols('x1 y1 x2 y2')


class RationalOneForm:
    """
    The meromorphic 1-form (num/den)·dx on the curve.

    Parameters
    ----------
    num : BivarPoly
    den : BivarPoly, optional
        Defaults to 1.
    label : str, optional
    kind : str, optional
        `'first'`, `'second'` or `'third'` for combinatorial forms.
    """

    def __init__(self, num, den=None, label=None, kind=None):
        if den is None:
            den = BivarPoly({(0, 0): 1})
        if den.is_zero():
            raise DegenerateInputError("form denominator is zero")
        self.num = num
        self.den = den
        self.label = label
        self.kind = kind

    def __repr__(self):
        return f"RationalOneForm(({self.num.to_expr()})/({self.den.to_expr()}) dx)"

    @classmethod
    def parse(cls, num, den='1', params=None):
        return cls(BivarPoly.parse(num, params), BivarPoly.parse(den, params))

    def eval(self, x, y):
        """The dx-coefficient num/den at (x, y)."""
        return self.num(x, y) / self.den(x, y)

    __call__ = eval

    def _combine(self, other, sign):
        if self.den == other.den:
            return RationalOneForm(self.num + sign * other.num, self.den)
        return RationalOneForm(self.num * other.den + sign * (other.num * self.den),
                               self.den * other.den)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return RationalOneForm(-self.num, self.den, self.label, self.kind)

    def __mul__(self, scalar):
        return RationalOneForm(self.num * scalar, self.den, self.label, self.kind)

    __rmul__ = __mul__

    def times(self, chart):
        """Pole data {k: t_k} in the chart's local coordinate."""
        return chart.times(self.num, self.den)

    def residue(self, chart):
        return self.times(chart).get(0, 0j)

    def to_json(self):
        return {'num': str(self.num.to_expr()), 'den': str(self.den.to_expr())}


def omega_comb(P, i, j):
    """
    The combinatorial 1-form Ω_ij = x^i y^j dx / P_y, labeled with its
    kind from the Newton polygon classes.
    """
    newton = build_newton(P)
    num = BivarPoly({(i, j): 1}, exact=P.exact)
    return RationalOneForm(num, P.partial('y'), label=f"Omega_{i}{j}",
                           kind=form_kind(newton, i, j))


def puncture_residue(P, i, j, puncture):
    """
    Residue of Ω_ij at a puncture.

    For (i, j) on the puncture's residue line (pole order 1) over x = ∞
    this is the closed form a·η^j / P'_α(η); other cases are read from
    the Laurent series in the puncture's coordinate.

    Raises
    ------
    core.exceptions.DegenerateInputError
        If the side polynomial has a multiple root at η.
    """
    if not puncture.simple or puncture.side_derivative == 0:
        raise DegenerateInputError(
            f"side polynomial of {puncture.label} has a multiple root"
        )
    if puncture.at_infinity:
        order = pole_order(i, j, puncture)
        if order < 1:
            return 0j
        if order == 1:
            return puncture.a * puncture.eta ** j / puncture.side_derivative
    chart = LocalChart.at_puncture(P, puncture)
    return omega_comb(P, i, j).residue(chart)


def residue_circle(form, chart, n_samples=128, rho=None):
    """Residue of a form by trapezoidal quadrature on a ξ-circle."""
    def integrand(xi, x, y):
        return form(x, y) * chart.a * xi ** (chart.a - 1)

    return chart.fft_coefficients(integrand, n_samples, rho)[-1]


########################################
#           BIDIFFERENTIALS            #
########################################
class CombBidifferential:
    """
    Q^comb(x1, y1, x2, y2) = Σ q·x1^u1 y1^v1 x2^u2 y2^v2, stored as a
    mapping of exponent quadruples to coefficients, and the curve it
    belongs to.
    """

    def __init__(self, P, terms):
        self.P = P
        self.terms = {k: c for k, c in terms.items() if c != 0}

    def __repr__(self):
        return f"CombBidifferential({self.to_expr()})"

    def to_expr(self, x1=X1, y1=Y1, x2=X2, y2=Y2):
        return sympy.Add(*(sympy.sympify(c) * x1**a * y1**b * x2**u * y2**v
                           for (a, b, u, v), c in self.terms.items()))

    def is_symmetric(self):
        return all(self.terms.get((u, v, a, b), 0) == c
                   for (a, b, u, v), c in self.terms.items())

    def eval(self, x1, y1, x2, y2):
        out = 0j
        for (a, b, u, v), c in self.terms.items():
            out = out + complex(c) * np.power(x1, a) * np.power(y1, b) \
                * np.power(x2, u) * np.power(y2, v)
        return out

    __call__ = eval

    def at_first(self, x1, y1):
        """Q(x1, y1, ·, ·) as a float BivarPoly in the second point."""
        out = {}
        for (a, b, u, v), c in self.terms.items():
            out[(u, v)] = out.get((u, v), 0) + complex(c) * complex(x1) ** a \
                * complex(y1) ** b
        return BivarPoly(out, exact=False)


def q_comb_pair(newton, first, second):
    """
    Weighted lattice points contributed by one pair of support points.

    Parameters
    ----------
    newton : NewtonData
    first, second : tuple of int
        (i, j) and (i', j') with i > i' and j < j'.

    Returns
    -------
    list of tuple
        `(weight, (u1, v1, u2, v2))` before symmetrization.
    """
    (i, j), (ip, jp) = first, second
    if not (i > ip and j < jp):
        return []
    out = []
    hyp = (ip - i, jp - j)
    corner = (0, jp - j)
    corner_side = hyp[0] * corner[1] - hyp[1] * corner[0]
    for u in range(ip, i + 1):
        for v in range(j, jp + 1):
            side = hyp[0] * (v - j) - hyp[1] * (u - i)
            if side * corner_side < 0:
                continue
            if locate(newton.hull, (u, v)) == 'interior':
                continue
            weight = abs(u - i) * abs(v - jp)
            if weight == 0:
                continue
            if side == 0:
                weight = sympy.Rational(weight, 2)
            out.append((weight, (u - 1, v - 1, i + ip - u - 1, j + jp - v - 1)))
    return out


@lru_cache(maxsize=32)
def q_comb(P):
    """
    The triangle polynomial Q^comb of P.

    Every pair (i, j), (i', j') of the support with i > i' and j < j'
    spans the right triangle (i, j), (i', j'), (i, j'). Its lattice
    points that are not strictly interior to the Newton polygon
    contribute P_ij·P_i'j'·|u − i|·|v − j'|·x1^(u−1) y1^(v−1)
    x2^(i+i'−u−1) y2^(j+j'−v−1), the weight halved on the open
    hypotenuse. The sum is symmetrized in the two points.

    Returns
    -------
    CombBidifferential
    """
    newton = build_newton(P)
    terms = {}
    support = list(P.support)
    for first in support:
        for second in support:
            c = P[first] * P[second]
            for weight, (a, b, u, v) in q_comb_pair(newton, first, second):
                value = c * weight if P.exact else c * float(weight)
                terms[(a, b, u, v)] = terms.get((a, b, u, v), 0) + value
                terms[(u, v, a, b)] = terms.get((u, v, a, b), 0) + value
    if P.exact:
        terms = {k: sympy.expand(c) for k, c in terms.items()}
    logger.debug("Q^comb has %d terms", len(terms))
    return CombBidifferential(P, terms)


def _point(p):
    if hasattr(p, 'x'):
        return complex(p.x), complex(p.y)
    return complex(p[0]), complex(p[1])


def _coords(p):
    if hasattr(p, 'x'):
        return p.x, p.y
    return p[0], p[1]


def bergman_comb(P, p1, p2):
    """
    Coefficient of dx1⊗dx2 in B^comb at two distinct points:

        [−P(x1, y2)·P(x2, y1) / ((x1−x2)²(y1−y2)²) + Q^comb] / (P_y(p1)·P_y(p2)).

    `p1`, `p2` are `SurfacePoint`s or (x, y) pairs; array coordinates
    are broadcast.
    """
    Pn = P.numeric()
    Py = Pn.partial('y')
    x1, y1 = _coords(p1)
    x2, y2 = _coords(p2)
    Q = q_comb(P)
    naive = -Pn(x1, y2) * Pn(x2, y1) / ((x1 - x2) ** 2 * (y1 - y2) ** 2)
    return (naive + Q(x1, y1, x2, y2)) / (Py(x1, y1) * Py(x2, y2))


def bergman_comb_rational(P, p1, extra=None):
    """
    B^comb(p1, ·) as a rational function (num, den) of the second point.

    Parameters
    ----------
    P : BivarPoly
    p1 : SurfacePoint or tuple of complex
    extra : BivarPoly, optional
        A polynomial in the second point added to Q^comb(p1, ·), e.g.
        the S-correction Σ S x1^i y1^j x2^k y2^l.

    Returns
    -------
    tuple of BivarPoly
    """
    Pn = P.numeric()
    x1, y1 = _point(p1)
    one_x = BivarPoly({(1, 0): 1, (0, 0): -x1}, exact=False)
    one_y = BivarPoly({(0, 1): 1, (0, 0): -y1}, exact=False)
    in_y = BivarPoly({(0, j): c for j, c in enumerate(Pn.y_values(x1))},
                     exact=False)
    in_x = BivarPoly({(i, 0): complex(c) for i, c in enumerate(
        np.polynomial.polynomial.polyval(y1, Pn.as_array().T))}, exact=False)
    gap = one_x * one_x * one_y * one_y
    poly = q_comb(P).at_first(x1, y1)
    if extra is not None:
        poly = poly + extra
    num = -(in_y * in_x) + poly * gap
    den = gap * Pn.partial('y')(x1, y1) * Pn.partial('y')
    return num, den


def bergman_diagonal(P, p):
    """
    Finite part of B^comb(p, p') as p' → p on the same sheet: the ξ⁰
    coefficient of its Laurent expansion in ξ = x' − x, which starts
    with ξ^(−2).
    """
    x, y = _point(p)
    chart = LocalChart.at_point(P, x, y)
    num, den = bergman_comb_rational(P, (x, y))
    series = chart.laurent(num, den, 4)
    return series.coefficient(0)


def _g_rational(Pn, x1, y1):
    """G(·; p1) = (P(x1, y) − P(x, y1)) / ((x − x1)(y − y1)) as (num, den)."""
    in_y = BivarPoly({(0, j): c for j, c in enumerate(Pn.y_values(x1))},
                     exact=False)
    in_x = BivarPoly({(i, 0): complex(c) for i, c in enumerate(
        np.polynomial.polynomial.polyval(y1, Pn.as_array().T))}, exact=False)
    den = BivarPoly({(1, 1): 1, (1, 0): -y1, (0, 1): -x1, (0, 0): x1 * y1},
                    exact=False)
    return in_y - in_x, den


def ds_comb(P, p1, p2, p):
    """
    dx-coefficient of the combinatorial third-kind form
    dS^comb_{p1,p2}(p) = dx / (2P_y) · [G(p; p1) − G(p; p2)], with simple
    poles of residue +1 at p1 and −1 at p2.
    """
    Pn = P.numeric()
    x1, y1 = _coords(p1)
    x2, y2 = _coords(p2)
    x, y = _coords(p)

    def G(xa, ya):
        return (Pn(xa, y) - Pn(x, ya)) / ((x - xa) * (y - ya))

    return (G(x1, y1) - G(x2, y2)) / (2 * Pn.partial('y')(x, y))


def ds_comb_rational(P, p1, p2):
    """dS^comb_{p1,p2} as a rational function (num, den) of the point p."""
    Pn = P.numeric()
    n1, d1 = _g_rational(Pn, *_point(p1))
    n2, d2 = _g_rational(Pn, *_point(p2))
    return n1 * d2 - n2 * d1, d1 * d2 * Pn.partial('y') * 2


########################################
#             C POLYNOMIALS            #
########################################
class CPolynomial:
    """
    The polynomials C_ij(x1, y1), (i, j) ∈ N°, with

        dζ_ij(p1) = ([x^i y^j] S-term + C_ij(p1)) dx1 / P_y(p1).
    """

    def __init__(self, P, polys):
        self.P = P
        self.polys = polys

    def __repr__(self):
        return f"CPolynomial({ {k: p.to_expr() for k, p in self.polys.items()} })"

    def __getitem__(self, key):
        return self.polys[tuple(key)]

    def eval(self, x1, y1):
        """C_ij(x1, y1) in N° order, along the last axis."""
        return np.stack([p(x1, y1) * np.ones(np.shape(x1)) for p in self.polys.values()],
                        axis=-1)


def _exact_quotient(num, den, gens, exact):
    quotient, remainder = sympy.div(sympy.Poly(num, *gens),
                                    sympy.Poly(den, *gens))
    if exact:
        failed = not remainder.is_zero
    else:
        coeffs = [abs(complex(c)) for c in remainder.coeffs()]
        scale = max([1.0] + [abs(complex(c)) for c in sympy.Poly(num, *gens).coeffs()])
        failed = bool(coeffs) and max(coeffs) > math.sqrt(config.root_tol) * scale
    if failed:
        raise DegenerateInputError(
            "C-polynomial division left a nonzero remainder; P may be "
            "non-generic"
        )
    return quotient.as_expr()


@lru_cache(maxsize=32)
def c_poly(P):
    """
    The C-polynomials of P.

    With dx = x − x1, dy = y − y1 and the exact quotients

        R_x = [P(x, y1) − P(x1, y1) − P_x(x1, y1)·dx] / dx²
        R_y = [P(x1, y) − P(x1, y1) − P_y(x1, y1)·dy] / dy²
        D   = P(x1, y) + P(x, y1) − P(x, y) − P(x1, y1)
        T_x = −P_y(x1, y1)·[D + dx·(P_x(x1, y) − P_x(x1, y1))] / (2·dx²·dy)
        T_y = −P_x(x1, y1)·[D + dy·(P_y(x, y1) − P_y(x1, y1))] / (2·dx·dy²)

    the polynomial Q^comb(x, y, x1, y1) − R_x·R_y + T_x + T_y equals
    Σ C_ij(x1, y1)·x^i y^j on the curve, and C_ij is its coefficient.

    Raises
    ------
    core.exceptions.DegenerateInputError
        If a division is inexact, or the result involves monomials x^i y^j
        outside N°.
    """
    newton = build_newton(P)
    gens = (X, Y, X1, Y1)
    expr = P.to_expr()
    P_at = lambda a, b: expr.subs({X: a, Y: b}, simultaneous=True)
    Px = sympy.diff(expr, X)
    Py = sympy.diff(expr, Y)
    Px_at = lambda a, b: Px.subs({X: a, Y: b}, simultaneous=True)
    Py_at = lambda a, b: Py.subs({X: a, Y: b}, simultaneous=True)
    dx, dy = X - X1, Y - Y1
    exact = P.exact

    R_x = _exact_quotient(
        sympy.expand(P_at(X, Y1) - P_at(X1, Y1) - Px_at(X1, Y1) * dx),
        sympy.expand(dx ** 2), gens, exact)
    R_y = _exact_quotient(
        sympy.expand(P_at(X1, Y) - P_at(X1, Y1) - Py_at(X1, Y1) * dy),
        sympy.expand(dy ** 2), gens, exact)
    D = P_at(X1, Y) + P_at(X, Y1) - expr - P_at(X1, Y1)
    T_x = _exact_quotient(
        sympy.expand(-Py_at(X1, Y1) * (D + dx * (Px_at(X1, Y) - Px_at(X1, Y1)))),
        sympy.expand(2 * dx ** 2 * dy), gens, exact)
    T_y = _exact_quotient(
        sympy.expand(-Px_at(X1, Y1) * (D + dy * (Py_at(X, Y1) - Py_at(X1, Y1)))),
        sympy.expand(2 * dx * dy ** 2), gens, exact)
    Q = q_comb(P).to_expr(X, Y, X1, Y1)
    total = sympy.Poly(sympy.expand(Q - R_x * R_y + T_x + T_y), X, Y)
    polys = {point: BivarPoly({}, exact=exact) for point in newton.interior}
    for (i, j), coeff in total.terms():
        if (i, j) not in polys:
            if not exact and abs(complex(sympy.N(coeff.subs({X1: 1, Y1: 1})))) \
                    < math.sqrt(config.root_tol):
                continue
            raise DegenerateInputError(
                f"C-polynomial has a term x^{i} y^{j} outside N°"
            )
        polys[(i, j)] = BivarPoly.from_expr(coeff, X1, Y1, exact=exact)
    logger.debug("C-polynomials: %s", {k: p.to_expr() for k, p in polys.items()})
    return CPolynomial(P, polys)


def schwarzian(samples, h):
    """
    Schwarzian derivative {f, z} = f'''/f' − (3/2)(f''/f')² from the
    values f(z−2h), f(z−h), f(z), f(z+h), f(z+2h).
    """
    fm2, fm1, f0, fp1, fp2 = samples
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h ** 2)
    d3 = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * h ** 3)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2
