"""
Numerical navigation of the Riemann surface of P(x, y) = 0 as a branched
cover of the x-plane: fibers, analytic continuation of y(x) along
piecewise-linear paths, monodromy, the default cycle basis of
hyperelliptic curves and local series around special points.
"""


__all__ = [
    'CircleSpec',
    'CycleSet',
    'default_cycles_hyperelliptic',
    'fiber',
    'hyperelliptic_rhs',
    'local_series',
    'monodromy',
    'PathSpec',
    'puiseux',
    'riemann_hurwitz_genus',
    'SurfacePoint',
    'track',
    'TrackResult',
    'winding_number'
]


import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from curvint import config
from curvint.algebra import (
    _root_key,
    critical_values,
    fiber_roots,
    univariate_roots
)
from curvint.core.exceptions import (
    CycleSetError,
    CurveInputError,
    PathTooCloseError,
    UnsupportedShapeError
)
from curvint.polygon import PunctureInfo, punctures
from curvint.series import LocalChart, charts_at


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurfacePoint:
    """A point (x, y) of the curve and its residual |P(x, y)|."""

    x: complex
    y: complex
    residual: float = 0.0

    @classmethod
    def on(cls, P, x, y):
        x, y = complex(x), complex(y)
        return cls(x, y, abs(P.numeric()(x, y)))

    def as_tuple(self):
        return self.x, self.y


@dataclass(frozen=True)
class PathSpec:
    """
    A piecewise-linear path in the x-plane and the sheet it starts on.

    Attributes
    ----------
    waypoints : tuple of complex
    start_sheet : int
        Index into the sorted fiber over the first waypoint.
    closed : bool
        If `True`, the path returns to its first waypoint.
    label : str
    start_y : complex, optional
        Explicit starting y, overriding `start_sheet`.
    """

    waypoints: tuple
    start_sheet: int = 0
    closed: bool = False
    label: str = ''
    start_y: complex = None

    def __post_init__(self):
        points = tuple(complex(w) for w in self.waypoints)
        if not points:
            raise CurveInputError("a path needs at least one waypoint")
        object.__setattr__(self, "waypoints", points)
        if self.start_y is not None:
            object.__setattr__(self, "start_y", complex(self.start_y))

    @property
    def vertices(self):
        """Waypoints, with the first repeated at the end for closed paths."""
        if self.closed:
            return self.waypoints + self.waypoints[:1]
        return self.waypoints

    def reversed(self):
        """The same path run backwards, starting where this one starts."""
        if self.closed:
            pts = self.waypoints[:1] + self.waypoints[:0:-1]
            return replace(self, waypoints=pts)
        return replace(self, waypoints=self.waypoints[::-1], start_y=None)

    def to_json(self):
        out = {
            'waypoints': [[w.real, w.imag] for w in self.waypoints],
            'start_sheet': self.start_sheet,
            'closed': self.closed,
            'label': self.label
        }
        if self.start_y is not None:
            out['start_y'] = [self.start_y.real, self.start_y.imag]
        return out

    @classmethod
    def from_json(cls, data):
        start_y = data.get('start_y')
        return cls(
            tuple(complex(re, im) for re, im in data['waypoints']),
            int(data.get('start_sheet', 0)),
            bool(data.get('closed', False)),
            data.get('label', ''),
            None if start_y is None else complex(*start_y)
        )


@dataclass(frozen=True)
class CircleSpec:
    """A small loop around a pole or puncture, in its local coordinate."""

    center: str
    radius: float = None


@dataclass
class CycleSet:
    """
    The marked loops: A and B closed paths (A_i·B_j = δ_ij), and small
    circles around punctures keyed by label.
    """

    A: list
    B: list
    C: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def genus(self):
        return len(self.A)

    def loop(self, name):
        """Look up `'A1'`, `'B2'` (1-based) or a C label."""
        kind, index = name[:1], name[1:]
        if kind in ("A", "B") and index.isdigit():
            loops = self.A if kind == 'A' else self.B
            i = int(index) - 1
            if 0 <= i < len(loops):
                return loops[i]
        if name in self.C:
            return self.C[name]
        raise CycleSetError(f"no loop named {name!r} in the cycle set")

    def to_json(self):
        return {
            'A': [p.to_json() for p in self.A],
            'B': [p.to_json() for p in self.B],
            'C': {k: {'center': c.center, 'radius': c.radius}
                  for k, c in self.C.items()},
            'metadata': self.metadata
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            [PathSpec.from_json(p) for p in data.get('A', [])],
            [PathSpec.from_json(p) for p in data.get('B', [])],
            {k: CircleSpec(c.get('center', k), c.get('radius'))
             for k, c in data.get('C', {}).items()},
            dict(data.get('metadata', {}))
        )


@dataclass
class TrackResult:
    """Endpoint of a tracked path, the full trace and the end sheet index."""

    point: SurfacePoint
    trace: list
    sheet: int


########################################
#                FIBERS                #
########################################
def fiber(P, x):
    """
    All roots y of P(x, ·), sorted by (real, imaginary) part after one
    Newton polish.

    Parameters
    ----------
    P : BivarPoly
    x : complex

    Returns
    -------
    list of complex
    """
    Pn = P.numeric()
    x = complex(x)
    roots = np.array(fiber_roots(Pn, x), dtype=complex)
    if roots.size:
        Py = Pn.partial('y')
        with np.errstate(all='ignore'):
            step = Pn(np.full_like(roots, x), roots) / Py(np.full_like(roots, x), roots)
        ok = np.isfinite(step) & (np.abs(step) < 1e-3 * (1 + np.abs(roots)))
        roots = np.where(ok, roots - np.where(ok, step, 0), roots)
    return sorted((complex(r) for r in roots), key=_root_key)


def _distance_to_critical(crit, x):
    if not crit:
        return math.inf
    return min(abs(x - c) for c in crit)


def _match(roots, target):
    dist = np.abs(np.asarray(roots) - target)
    order = np.argsort(dist)
    d1 = dist[order[0]]
    d2 = dist[order[1]] if len(order) > 1 else math.inf
    return roots[order[0]], d1, d2


def continue_along(P, x0, y0, x1, trace=None):
    """
    Analytically continue the root y0 of P(x0, ·) along the segment
    [x0, x1].

    Steps are capped at half the distance to the nearest critical
    x-value. A step is accepted when the root closest to the predicted
    value is at least `config.separation_ratio` times closer than the
    runner-up; otherwise the step is halved.

    Raises
    ------
    core.exceptions.PathTooCloseError
        If the step falls below `config.track_min_step`.
    """
    Pn = P.numeric()
    Px, Py = Pn.partial('x'), Pn.partial('y')
    crit = critical_values(P)
    x, y = complex(x0), complex(y0)
    x1 = complex(x1)
    length = abs(x1 - x)
    scale = max(1.0, length)
    while abs(x1 - x) > 1e-15 * scale:
        remaining = x1 - x
        h = min(1.0, 0.5 * _distance_to_critical(crit, x) / abs(remaining))
        while True:
            if h * abs(remaining) < config.track_min_step:
                raise PathTooCloseError(x, "step size underflow")
            x_new = x + h * remaining if h < 1 else x1
            py = Py(x, y)
            slope = -Px(x, y) / py if py != 0 else 0j
            y_pred = y + (x_new - x) * slope
            roots = np.array(fiber_roots(Pn, x_new), dtype=complex)
            if roots.size == 0:
                raise PathTooCloseError(x_new, "empty fiber")
            y_new, d1, d2 = _match(roots, y_pred)
            if d2 > 0 and d2 >= config.separation_ratio * d1:
                break
            logger.debug("halving tracking step at x=%s", x)
            h /= 2
        py = Py(x_new, y_new)
        step = Pn(x_new, y_new) / py if py != 0 else 0j
        if abs(step) < 1e-3 * (1 + abs(y_new)):
            y_new -= step
        x, y = x_new, complex(y_new)
        if trace is not None:
            trace.append((x, y))
    return y


def _start_y(P, path):
    if path.start_y is not None:
        return complex(path.start_y)
    roots = fiber(P, path.waypoints[0])
    if not 0 <= path.start_sheet < len(roots):
        raise CycleSetError(
            f"path {path.label or '?'} starts on sheet {path.start_sheet} "
            f"but the fiber has {len(roots)} points"
        )
    return roots[path.start_sheet]


def _sheet_index(P, x, y):
    roots = fiber(P, x)
    return int(np.argmin([abs(r - y) for r in roots]))


def track(P, path):
    """
    Track a sheet along `path`.

    Returns
    -------
    TrackResult
    """
    y = _start_y(P, path)
    vertices = path.vertices
    trace = [(vertices[0], y)]
    for a, b in zip(vertices[:-1], vertices[1:]):
        y = continue_along(P, a, y, b, trace)
    end = vertices[-1]
    return TrackResult(SurfacePoint.on(P, end, y), trace,
                       _sheet_index(P, end, y))


def monodromy(P, loop):
    """
    Permutation of the fiber over the loop's base point induced by
    continuation along the closed `loop`.

    Returns
    -------
    tuple of int
        Entry i is the index of the sheet reached from sheet i.
    """
    if not loop.closed:
        raise CycleSetError(f"path {loop.label or '?'} is not closed")
    roots = fiber(P, loop.waypoints[0])
    return tuple(track(P, replace(loop, start_sheet=i, start_y=None)).sheet
                 for i in range(len(roots)))


def _cycle_count(perm):
    seen, count = set(), 0
    for start in range(len(perm)):
        if start in seen:
            continue
        count += 1
        i = start
        while i not in seen:
            seen.add(i)
            i = perm[i]
    return count


def _circle(center, radius, n=16):
    return tuple(center + radius * np.exp(2j * np.pi * np.arange(n) / n))


def riemann_hurwitz_genus(P):
    """
    Genus from the cycle structure of local monodromies: g = 1 − d +
    Σ_c (d − #cycles(σ_c)) / 2 over critical x-values and x = ∞.
    """
    d = P.degy
    crit = critical_values(P)
    ramification = 0
    for c in crit:
        others = [abs(c - o) for o in crit if o != c]
        radius = 0.5 * min(others) if others else 1.0
        perm = monodromy(P, PathSpec(_circle(c, radius), closed=True))
        ramification += d - _cycle_count(perm)
    big = 2 * max([1.0] + [abs(c) for c in crit]) + 1
    perm = monodromy(P, PathSpec(_circle(0j, big, 32), closed=True))
    ramification += d - _cycle_count(perm)
    genus = 1 - d + ramification // 2
    logger.info("Riemann-Hurwitz genus %d", genus)
    return genus


########################################
#          HYPERELLIPTIC CYCLES        #
########################################
def hyperelliptic_rhs(P):
    """
    Write P as c·(y² − P̂(x)) and return the coefficients of P̂, highest
    degree first.

    Raises
    ------
    core.exceptions.UnsupportedShapeError
        If P is not of that shape.
    """
    Pn = P.numeric()
    ok = Pn.degy == 2 and Pn.coeff_y(1).is_zero() and Pn.coeff_y(2).degx == 0
    if not ok:
        raise UnsupportedShapeError(
            "curve is not hyperelliptic of the form y² − P̂(x); supply cycles"
        )
    lead = complex(Pn[(0, 2)])
    rhs = -Pn.x_coefficients(0) / lead
    return rhs[::-1]


def winding_number(path, z):
    """Winding number of a closed path's x-projection around z."""
    pts = np.array(path.vertices) - z
    angles = np.angle(pts[1:] / pts[:-1])
    return int(round(np.sum(angles) / (2 * np.pi)))


def _tube(chain, radius, n_cap=8):
    """
    Counterclockwise polygon at distance `radius` around the polyline
    through `chain`, with round caps at both ends.
    """
    chain = [complex(c) for c in chain]
    if len(chain) == 1:
        return _circle(chain[0], radius)
    dirs = [(b - a) / abs(b - a) for a, b in zip(chain[:-1], chain[1:])]

    def side(points, directions):
        out = []
        for k, p in enumerate(points):
            if k == 0:
                normal = -1j * directions[0]
            elif k == len(points) - 1:
                normal = -1j * directions[-1]
            else:
                bisect = -1j * (directions[k - 1] + directions[k])
                cos_half = abs(bisect) / 2
                normal = bisect / abs(bisect) / max(cos_half, 0.25)
            out.append(p + radius * normal)
        return out

    lower = side(chain, dirs)
    back = chain[::-1]
    upper = side(back, [-d for d in dirs[::-1]])
    cap_end, cap_start = [], []
    for t in range(1, n_cap):
        angle = np.pi * t / n_cap
        cap_end.append(chain[-1] + radius * (-1j * dirs[-1]) * np.exp(1j * angle))
        cap_start.append(chain[0] + radius * (1j * dirs[0]) * np.exp(1j * angle))
    return tuple(lower + cap_end + upper + cap_start)


def _branch_values(P):
    rhs = hyperelliptic_rhs(P)
    if P.exact:
        lead = P[(0, 2)]
        roots = univariate_roots((-P.coeff_y(0) * (1 / lead)).univariate_x())
    else:
        roots = univariate_roots(list(rhs))
    return [r for r, mult in roots if mult % 2 == 1], [r for r, _ in roots]


def default_cycles_hyperelliptic(P):
    """
    The default marked basis of a hyperelliptic curve y² = P̂(x).

    With a_1, ..., a_n the branch values (odd-multiplicity roots of P̂)
    sorted by real then imaginary part and g = ⌊(n − 1)/2⌋, A_i loops
    around {a_2i, a_2i+1} and B_i around {a_2i+1, ..., a_n} when n is
    even or {a_1, ..., a_2i} when n is odd. Loops are counterclockwise
    tubes starting on sheet 0; orientations are normalized later by
    `periods.compute_periods`.

    Returns
    -------
    CycleSet

    Raises
    ------
    core.exceptions.UnsupportedShapeError
        If P is not hyperelliptic.
    core.exceptions.CycleSetError
        If a constructed loop fails its winding check.
    """
    branch, all_roots = _branch_values(P)
    n = len(branch)
    g = max((n - 1) // 2, 0)
    circles = {p.label: CircleSpec(p.label) for p in punctures(P)}
    meta = {'construction': 'hyperelliptic-ladder',
            'branch_values': [[b.real, b.imag] for b in branch]}
    if g == 0:
        logger.info("genus 0: no A/B loops")
        return CycleSet([], [], circles, meta)
    gaps = [abs(u - v) for k, u in enumerate(all_roots)
            for v in all_roots[k + 1:]]
    r = config.clearance_fraction * min(gaps)
    A, B, enclosed = [], [], {}
    for i in range(1, g + 1):
        a_set = branch[2 * i - 1:2 * i + 1]
        if n % 2 == 0:
            b_set = branch[2 * i:]
            b_radius = r * (1 + (g + 1 - i) / (g + 1))
        else:
            b_set = branch[:2 * i]
            b_radius = r * (1 + i / (g + 1))
        # nested B tubes get distinct radii so that their outlines never touch
        A.append(PathSpec(_tube(a_set, r), 0, True, f"A{i}"))
        B.append(PathSpec(_tube(b_set, b_radius), 0, True, f"B{i}"))
        enclosed[f"A{i}"], enclosed[f"B{i}"] = a_set, b_set
    for loop in A + B:
        for root in all_roots:
            expected = int(any(abs(root - e) < 1e-12
                               for e in enclosed[loop.label]))
            winding = winding_number(loop, root)
            if winding != expected:
                raise CycleSetError(
                    f"loop {loop.label} winds {winding} times around "
                    f"x = {root:.6g} (expected {expected})"
                )
        if track(P, loop).sheet != loop.start_sheet:
            raise CycleSetError(f"loop {loop.label} does not close on its sheet")
    logger.info("constructed hyperelliptic cycle basis, genus %d", g)
    return CycleSet(A, B, circles, meta)


########################################
#            LOCAL SERIES              #
########################################
@dataclass(frozen=True)
class Puiseux:
    """x = X + ξ^a (ξ^a at ∞) and y = Y + ξ^b · Σ_n w[n] ξ^n."""

    X: complex
    a: int
    Y: complex
    b: int
    w: np.ndarray


def _chart_for(P, center):
    if isinstance(center, LocalChart):
        return center
    if isinstance(center, PunctureInfo):
        return LocalChart.at_puncture(P, center)
    return charts_at(P, center)[0]


def puiseux(P, center, order):
    """
    Truncated local parameterization around a puncture, a degenerate
    point (first disc) or a regular point.

    Parameters
    ----------
    P : BivarPoly
    center : PunctureInfo, LocalChart or tuple of complex
    order : int
        Number of w-coefficients.

    Returns
    -------
    Puiseux
    """
    chart = _chart_for(P, center)
    return Puiseux(chart.X, chart.a, chart.Y, chart.b,
                   chart.w_series(order + 1).copy())


def local_series(P, center, f, order, n_samples=128):
    """
    Laurent coefficients [ξ^p] of `f(x, y)` for |p| ≤ order in the local
    coordinate at `center`, from samples on a small ξ-circle.
    """
    chart = _chart_for(P, center)
    coeffs = chart.fft_coefficients(lambda xi, x, y: f(x, y), n_samples)
    return {p: c for p, c in coeffs.items() if abs(p) <= order}
