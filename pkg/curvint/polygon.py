"""
Newton polygon combinatorics: the hull of the support of P, the
classification of its lattice points, the sides and the punctures they
carry, the local analysis at degenerate points and the moduli space of
holomorphic forms.

Everything here that depends only on the support of P uses exact
integer arithmetic. Coefficient-dependent data (side polynomial roots,
local constants at degenerate points) are complex floats.
"""


__all__ = [
    'BranchPointInfo',
    'branch_analysis',
    'build_newton',
    'convex_hull',
    'degree',
    'form_kind',
    'genus',
    'locate',
    'moduli_space',
    'NewtonData',
    'pole_order',
    'PunctureInfo',
    'punctures',
    'Side',
    'side_polynomial'
]


import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from curvint import config
from curvint.algebra import (
    BivarPoly,
    _numeric_roots,
    _root_key,
    degenerate_points,
    univariate_roots
)
from curvint.core.exceptions import (
    DegenerateInputError,
    PrecisionEscalationError
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Side:
    """
    An edge of a Newton polygon.

    Attributes
    ----------
    start, end : tuple of int
        Endpoints, in counterclockwise hull order.
    normal : tuple of int
        Primitive inward normal (a, b).
    m : int
        min over the support of a·i + b·j, attained on the side.
    length : int
        Lattice length (number of irreducible sub-segments).
    """

    start: tuple
    end: tuple
    normal: tuple
    m: int
    length: int

    @property
    def a(self):
        return self.normal[0]

    @property
    def b(self):
        return self.normal[1]

    def contains(self, point):
        return self.a * point[0] + self.b * point[1] == self.m

    def subsegments(self):
        """The irreducible integer sub-segments of the side."""
        di = (self.end[0] - self.start[0]) // self.length
        dj = (self.end[1] - self.start[1]) // self.length
        return [((self.start[0] + t * di, self.start[1] + t * dj),
                 (self.start[0] + (t + 1) * di, self.start[1] + (t + 1) * dj))
                for t in range(self.length)]


@dataclass(frozen=True)
class NewtonData:
    """
    The Newton polygon of P and the classification of its lattice
    points.

    `interior`, `third` and `second` hold the points (i, j) of `nbar`
    for which (i + 1, j + 1) lies in the strict interior, on the
    boundary, or outside the hull, respectively.
    `nbar` holds the lattice points of the closed hull together with
    those whose shift (i + 1, j + 1) is not exterior.
    """

    support: tuple
    hull: tuple
    nbar: tuple
    interior: tuple
    third: tuple
    second: tuple
    sides: tuple

    def classify(self, point):
        """Return `'first'`, `'third'` or `'second'` for a lattice point."""
        return form_kind(self, *point)


@dataclass(frozen=True)
class PunctureInfo:
    """
    A puncture: a point of the compact curve over x = ∞ or y = ∞.

    The canonical local coordinate ξ is defined by x = X + ξ^a (x = ξ^a
    at infinity, a < 0) and y = Y + ξ^b·w(ξ) with w(0) = eta.
    """

    label: str
    side: Side
    eta: complex
    a: int
    b: int
    m: int
    X: complex
    Y: complex
    at_infinity: bool
    base: BivarPoly = field(repr=False)
    side_derivative: complex = 0j
    simple: bool = True


@dataclass(frozen=True)
class BranchPointInfo:
    """
    Local analysis of the curve at a degenerate point β.

    Attributes
    ----------
    beta : tuple of complex
        (x_β, y_β).
    ell : int
        Number of local discs (ℓ_β).
    segments : tuple of dict
        One entry per side of the bottom-left chain: its normal
        `(a, b)`, `m`, lattice `length`, and local constants `C`.
    genus_beta : int
        Number of conditions the point imposes on holomorphic forms
        (𝔤_β).
    deg_beta : int
        Σ a over irreducible segments of the chain.
    check_points : tuple of tuple of int
        The lattice points (i', j') whose Taylor coefficients must
        vanish at β.
    shifted : BivarPoly
        P(x_β + x, y_β + y), with numerically negligible terms dropped.
    """

    beta: tuple
    ell: int
    segments: tuple
    genus_beta: int
    deg_beta: int
    check_points: tuple
    shifted: BivarPoly = field(repr=False)

    @property
    def is_nodal(self):
        return self.genus_beta > 0


########################################
#            HULL & LATTICE            #
########################################
def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """
    Vertices of the convex hull in counterclockwise order, starting
    from the lexicographically smallest point. Collinear points are
    dropped.
    """
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return tuple(pts)
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def locate(hull, point):
    """
    Locate `point` relative to a convex polygon given by its
    counterclockwise vertices.

    Returns
    -------
    str
        `'interior'`, `'boundary'` or `'exterior'`.
    """
    n = len(hull)
    if n == 0:
        return 'exterior'
    if n == 1:
        return 'boundary' if tuple(point) == hull[0] else 'exterior'
    if n == 2:
        p, q = hull
        if _cross(p, q, point) != 0:
            return 'exterior'
        lo = (min(p[0], q[0]), min(p[1], q[1]))
        hi = (max(p[0], q[0]), max(p[1], q[1]))
        inside = lo[0] <= point[0] <= hi[0] and lo[1] <= point[1] <= hi[1]
        return 'boundary' if inside else 'exterior'
    signs = [_cross(hull[k], hull[(k + 1) % n], point) for k in range(n)]
    if any(s < 0 for s in signs):
        return 'exterior'
    if all(s > 0 for s in signs):
        return 'interior'
    return 'boundary'


def _sides(hull, support):
    n = len(hull)
    if n < 2:
        return ()
    edges = [(hull[k], hull[(k + 1) % n]) for k in range(n)]
    if n == 2:
        edges = edges[:2]
    sides = []
    for p, q in edges:
        di, dj = q[0] - p[0], q[1] - p[1]
        g = math.gcd(abs(di), abs(dj))
        a, b = -dj // g, di // g
        m = min(a * i + b * j for i, j in support)
        sides.append(Side(p, q, (a, b), m, g))
    return tuple(sides)


@lru_cache(maxsize=64)
def _build_from_support(support):
    hull = convex_hull(support)
    imax = max(i for i, _ in support)
    jmax = max(j for _, j in support)
    nbar, interior, third, second = [], [], [], []
    for i in range(imax + 1):
        for j in range(jmax + 1):
            where = locate(hull, (i + 1, j + 1))
            # (i, j) may sit outside the hull while (i + 1, j + 1) does not
            if locate(hull, (i, j)) == 'exterior' and where == 'exterior':
                continue
            nbar.append((i, j))
            if where == 'interior':
                interior.append((i, j))
            elif where == 'boundary':
                third.append((i, j))
            else:
                second.append((i, j))
    return NewtonData(
        support=support,
        hull=hull,
        nbar=tuple(nbar),
        interior=tuple(interior),
        third=tuple(third),
        second=tuple(second),
        sides=_sides(hull, support)
    )


def build_newton(P):
    """
    Build the Newton polygon of P and classify its lattice points.

    Parameters
    ----------
    P : BivarPoly
        A nonzero polynomial.

    Returns
    -------
    NewtonData
    """
    if P.is_zero():
        raise DegenerateInputError("the zero polynomial has no Newton polygon")
    newton = _build_from_support(tuple(sorted(P.support)))
    logger.debug("Newton polygon hull %s, #N°=%d", newton.hull,
                 len(newton.interior))
    return newton


def degree(P):
    """Total degree of P (intersections with a generic line)."""
    return P.degtotal


def form_kind(newton, i, j):
    """
    Kind of the combinatorial form x^i y^j dx / P_y: `'first'` for N°,
    `'third'` for N''' and `'second'` otherwise.
    """
    if (i, j) in newton.interior:
        return 'first'
    if (i, j) in newton.third:
        return 'third'
    return 'second'


########################################
#              PUNCTURES               #
########################################
def _threshold(P, rel_tol):
    cutoff = rel_tol * P.scale()
    return BivarPoly({k: c for k, c in P.numeric().items() if abs(c) > cutoff},
                     exact=False)


def side_polynomial(base, side):
    """
    Coefficients of the side polynomial Σ_{(i,j) ∈ side} P_ij η^(j − j0),
    highest power first, with j0 the smallest j on the side.
    """
    points = sorted(((i, j) for (i, j) in base.support if side.contains((i, j))),
                    key=lambda p: p[1])
    j0 = points[0][1]
    coeffs = np.zeros(points[-1][1] - j0 + 1, dtype=complex)
    for i, j in points:
        coeffs[j - j0] += complex(base[(i, j)])
    return coeffs[::-1], j0


def _orbit_representatives(roots, a):
    """
    Group roots η related by η → η·ζ with ζ^|a| = 1 (the ambiguity of
    the local coordinate) and pick one per group.
    """
    groups = []
    for eta in roots:
        key = eta ** abs(a)
        for group in groups:
            if abs(group[0] ** abs(a) - key) <= 1e-6 * max(1.0, abs(key)):
                group.append(eta)
                break
        else:
            groups.append([eta])
    reps = []
    for group in groups:
        # pin the branch closest to the positive real axis
        reps.append(max(group, key=lambda z: (round(z.real / abs(z), 9),
                                              round(z.imag, 9))))
    return reps


def _side_punctures(base, side, X, at_infinity, start_index):
    coeffs, j0 = side_polynomial(base, side)
    deriv = np.polyder(coeffs)
    roots = [r for r in _numeric_roots(coeffs) if abs(r) > 1e-12]
    out = []
    for eta in _orbit_representatives(roots, side.a):
        # P_α(η) = η^j0 · (side polynomial), so P_α'(η) at a root is
        # η^j0 times the derivative of the reduced polynomial
        dval = complex(np.polyval(deriv, eta)) * eta ** j0
        simple = abs(dval) > 1e-8 * max(1.0, float(np.max(np.abs(coeffs))))
        out.append(PunctureInfo(
            label=f"inf{start_index + len(out)}",
            side=side,
            eta=complex(eta),
            a=side.a,
            b=side.b,
            m=side.m,
            X=complex(X),
            Y=0j,
            at_infinity=at_infinity,
            base=base,
            side_derivative=dval,
            simple=bool(simple)
        ))
    return out


def punctures(P, newton=None):
    """
    The punctures of the curve, one per orbit of side-polynomial roots
    on each side of the polygon pointing towards infinity.

    Sides with a < 0 carry the punctures over x = ∞. For each root X of
    P_d(x), the sides with a > 0 and b < 0 of the polygon of P(X + x, y)
    carry the punctures over x = X where y → ∞.

    Returns
    -------
    tuple of PunctureInfo
        Labeled `'inf0'`, `'inf1'`, ... in that order.
    """
    return _punctures(P, newton, config.root_tol, config.precision)


@lru_cache(maxsize=64)
def _punctures(P, newton, root_tol, precision):
    newton = newton or build_newton(P)
    Pn = P.numeric()
    out = []
    for side in newton.sides:
        if side.a < 0:
            out.extend(_side_punctures(Pn, side, 0j, True, len(out)))
    lead = P.leading_x()
    if lead.degx > 0:
        for X, _ in univariate_roots(lead.univariate_x()):
            shifted = _threshold(Pn.shift(X, 0), math.sqrt(root_tol))
            snewton = build_newton(shifted)
            for side in snewton.sides:
                if side.a > 0 and side.b < 0:
                    out.extend(_side_punctures(shifted, side, X, False,
                                               len(out)))
    for punct in out:
        if not punct.simple:
            logger.warning("puncture %s has a multiple side-polynomial root; "
                           "its coordinate needs a field extension",
                           punct.label)
    logger.info("found %d punctures", len(out))
    return tuple(out)


def pole_order(i, j, puncture):
    """
    Order of the pole of x^i y^j dx / P_y at a puncture (negative for
    zeros), m − (i+1)·a − (j+1)·b + 1.
    """
    return puncture.m - (i + 1) * puncture.a - (j + 1) * puncture.b + 1


########################################
#          DEGENERATE POINTS           #
########################################
def branch_analysis(P, beta):
    """
    Analyze the curve at a degenerate point.

    The bottom-left chain of the Newton polygon of P(x_β + x, y_β + y)
    (sides with a, b > 0) gives the local discs: each irreducible
    segment is a disc y − y_β ≈ C^(1/a)·(x − x_β)^(b/a), with C = η^a for
    η a root of the side polynomial.

    Parameters
    ----------
    P : BivarPoly
    beta : tuple of complex
        A point returned by `algebra.degenerate_points`.

    Returns
    -------
    BranchPointInfo
    """
    xb, yb = complex(beta[0]), complex(beta[1])
    shifted = _threshold(P.numeric().shift(xb, yb), math.sqrt(config.root_tol))
    if (0, 0) in shifted.support:
        raise DegenerateInputError(f"({xb:.6g}, {yb:.6g}) is not on the curve")
    hull = convex_hull(shifted.support)
    chain = [s for s in _sides(hull, shifted.support) if s.a > 0 and s.b > 0]
    segments = []
    for side in chain:
        coeffs, _ = side_polynomial(shifted, side)
        roots = [r for r in _numeric_roots(coeffs) if abs(r) > 1e-12]
        constants = sorted({_root_key(r ** side.a): complex(r ** side.a)
                            for r in roots}.values(), key=_root_key)
        segments.append({'normal': side.normal, 'm': side.m,
                         'length': side.length, 'C': tuple(constants)})
    ell = sum(s['length'] for s in segments)
    deg_beta = sum(s['normal'][0] * s['length'] for s in segments)
    if chain:
        imax = max(max(s.start[0], s.end[0]) for s in chain)
        jmax = max(max(s.start[1], s.end[1]) for s in chain)
    else:
        imax = jmax = 0
    check = []
    for i in range(1, imax + 1):
        for j in range(1, jmax + 1):
            if min(s.a * i + s.b * j - s.m for s in chain) <= 0:
                check.append((i - 1, j - 1))
    info = BranchPointInfo(
        beta=(xb, yb),
        ell=ell,
        segments=tuple(segments),
        genus_beta=len(check),
        deg_beta=deg_beta,
        check_points=tuple(check),
        shifted=shifted
    )
    logger.debug("degenerate point %s: ell=%d, genus_beta=%d", info.beta,
                 ell, info.genus_beta)
    return info


def _taylor_row(monomials, beta, point):
    """
    Row of the linear map h ↦ [x^i' y^j'] Σ h_ij (x_β+x)^i (y_β+y)^j.
    """
    xb, yb = beta
    ip, jp = point
    row = np.zeros(len(monomials), dtype=complex)
    for col, (i, j) in enumerate(monomials):
        if i >= ip and j >= jp:
            row[col] = (math.comb(i, ip) * math.comb(j, jp)
                        * xb ** (i - ip) * yb ** (j - jp))
    return row


@lru_cache(maxsize=64)
def moduli_space(P):
    """
    The space ℳ(P) of polynomials H supported on N° for which H dx/P_y
    is holomorphic.

    Generic curves give the whole span of N°. Each degenerate point
    with 𝔤_β > 0 cuts it down by requiring the Taylor coefficients of H
    at its check points to vanish.

    Returns
    -------
    monomials : tuple of tuple of int
        N°, the row labels of `basis`.
    basis : numpy.ndarray
        Orthonormal columns spanning ℳ(P), shape (#N°, 𝔤).

    Raises
    ------
    core.exceptions.PrecisionEscalationError
        If a singular value sits too close to the rank threshold to
        decide the dimension.
    """
    newton = build_newton(P)
    monomials = newton.interior
    n = len(monomials)
    rows = []
    if n:
        for beta in degenerate_points(P):
            info = branch_analysis(P, beta)
            for point in info.check_points:
                rows.append(_taylor_row(monomials, info.beta, point))
    if not rows:
        return monomials, np.eye(n, dtype=complex)
    A = np.array(rows)
    _, s, vh = np.linalg.svd(A)
    s_full = np.zeros(n)
    s_full[:len(s)] = s
    scale = max(s[0], 1.0)
    ambiguous = (s_full > config.rank_tol * scale / 100) & \
                (s_full < config.rank_tol * scale * 100)
    if np.any(ambiguous):
        raise PrecisionEscalationError(
            "rank of the holomorphy conditions is ambiguous at the working "
            "precision"
        )
    rank = int(np.sum(s_full > config.rank_tol * scale))
    basis = vh[rank:].conj().T
    logger.info("moduli space has dimension %d (#N°=%d)", basis.shape[1], n)
    return monomials, basis


def genus(P):
    """𝔤 = dim ℳ(P)."""
    return moduli_space(P)[1].shape[1]
