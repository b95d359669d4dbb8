"""
Periods of the combinatorial forms and the transcendental data built on
them: the A-period matrix 𝒦 and its inverse 𝒦̂ (with the residue-column
extension 𝒦̃ for curves with nodal points), the Riemann matrix τ, the
Bergman correction S, the normalization ζ of third-kind forms and the
Abel map. Also cycle-basis changes and the Rauch variational check.

All loop integrals are computed by adaptive Gauss-Legendre quadrature
along the tracked sheets of piecewise-linear paths.
"""


__all__ = [
    'abel_map',
    'change_cycles',
    'compute_K',
    'compute_K_degenerate',
    'compute_periods',
    'compute_S',
    'compute_tau',
    'curve_fingerprint',
    'cycle_integral',
    'crossed_loop',
    'cycles_fingerprint',
    'domain_path',
    'ds_integrand',
    'ExtendedKMatrix',
    'integrate_path',
    'fit_forms',
    'legendre_s_from_g2',
    'monomial_values',
    'PathIntegral',
    'PeriodData',
    'rauch_check',
    'RauchReport',
    'sample_points',
    'zeta',
    'zeta_path'
]


import hashlib
import json
import logging
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg
import sympy
from packaging.version import Version

from curvint import config
from curvint.algebra import BivarPoly, critical_values, degenerate_points
from curvint.core.exceptions import (
    CurveInputError,
    CurvintWarning,
    CycleSetError,
    FundamentalDomainError,
    NumericalError,
    QuadratureError,
    UnsupportedShapeError
)
from curvint.forms import (
    bergman_comb,
    bergman_comb_rational,
    c_poly,
    ds_comb,
    ds_comb_rational
)
from curvint.polygon import (
    PunctureInfo,
    branch_analysis,
    build_newton,
    genus,
    punctures
)
from curvint.series import LocalChart, charts_at
from curvint.surface import (
    PathSpec,
    SurfacePoint,
    _start_y,
    continue_along,
    default_cycles_hyperelliptic,
    fiber,
    winding_number
)


logger = logging.getLogger(__name__)

PathIntegral = namedtuple('PathIntegral', ['value', 'end'])

_GAUSS = {n: np.polynomial.legendre.leggauss(n) for n in (16, 32)}


########################################
#              QUADRATURE              #
########################################
class _TrackedPath:
    """Fiber values of a path at Gauss nodes, computed once per interval."""

    def __init__(self, P, path):
        self.P = P
        self.vertices = path.vertices
        self.start_y = _start_y(P, path)
        self._intervals = {}

    def interval(self, seg, s0, s1, y0):
        key = (seg, s0, s1)
        if key not in self._intervals:
            xa, xb = self.vertices[seg], self.vertices[seg + 1]
            nodes = np.concatenate([s0 + (s1 - s0) * (_GAUSS[n][0] + 1) / 2
                                    for n in (16, 32)])
            xs = xa + nodes * (xb - xa)
            ys = np.empty_like(xs)
            x, y = xa + s0 * (xb - xa), y0
            for k in np.argsort(nodes):
                y = continue_along(self.P, x, y, xs[k])
                x = xs[k]
                ys[k] = y
            y_end = continue_along(self.P, x, y, xa + s1 * (xb - xa))
            self._intervals[key] = (xs, ys, y_end)
        return self._intervals[key]


@lru_cache(maxsize=512)
def _tracked(P, path):
    return _TrackedPath(P, path)


def _values(integrand, x, y):
    values = np.asarray(integrand(x, y), dtype=complex)
    scalar = values.ndim == x.ndim
    return values.reshape(x.size, -1), scalar


def _adaptive(tracked, integrand, seg, s0, s1, y0, depth):
    xs, ys, y_end = tracked.interval(seg, s0, s1, y0)
    values, _ = _values(integrand, xs, ys)
    dx = tracked.vertices[seg + 1] - tracked.vertices[seg]
    scale = (s1 - s0) / 2 * dx
    coarse = (_GAUSS[16][1] * scale) @ values[:16]
    fine = (_GAUSS[32][1] * scale) @ values[16:]
    err = float(np.max(np.abs(fine - coarse)))
    tol = max(config.quad_tol * (s1 - s0), 1e-14 * float(np.max(np.abs(fine))))
    if err <= tol:
        return fine, y_end
    if depth >= config.quad_max_depth:
        raise QuadratureError(
            f"no convergence on segment {seg} after {depth} bisections "
            f"(error estimate {err:.3g})"
        )
    mid = 0.5 * (s0 + s1)
    left, y_mid = _adaptive(tracked, integrand, seg, s0, mid, y0, depth + 1)
    right, y1 = _adaptive(tracked, integrand, seg, mid, s1, y_mid, depth + 1)
    return left + right, y1


def integrate_path(P, integrand, path):
    """
    Integrate `integrand(x, y)·dx` along a path on the curve.

    Each linear piece is integrated adaptively: Gauss-Legendre rules
    with 16 and 32 nodes are compared and the interval bisected until
    they agree to `config.quad_tol`.

    Parameters
    ----------
    P : BivarPoly
    integrand : callable
        Called with arrays `x`, `y` of the same shape; returns values of
        that shape, or with one extra trailing axis for vector-valued
        integrands.
    path : PathSpec

    Returns
    -------
    PathIntegral
        `(value, end)` with `end` the SurfacePoint reached.

    Raises
    ------
    core.exceptions.QuadratureError
    core.exceptions.PathTooCloseError
    """
    tracked = _tracked(P, path)
    y = tracked.start_y
    _, scalar = _values(integrand, np.array([tracked.vertices[0]]),
                        np.array([y]))
    total = 0j
    for seg in range(len(tracked.vertices) - 1):
        if tracked.vertices[seg + 1] == tracked.vertices[seg]:
            continue
        value, y = _adaptive(tracked, integrand, seg, 0.0, 1.0, y, 0)
        total = total + value
    if scalar:
        total = complex(np.ravel(total)[0])
    return PathIntegral(total, SurfacePoint.on(P, tracked.vertices[-1], y))


def monomial_values(monomials, x, y):
    """x^i y^j for (i, j) in `monomials`, along a new last axis."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex),
                               np.asarray(y, dtype=complex))
    if not monomials:
        return np.zeros(x.shape + (0,), dtype=complex)
    return np.stack([x ** i * y ** j for i, j in monomials], axis=-1)


def _omega_integrand(P, monomials):
    Py = P.numeric().partial('y')

    def integrand(x, y):
        return monomial_values(monomials, x, y) / np.asarray(Py(x, y))[..., None]

    return integrand


########################################
#             PERIOD DATA              #
########################################
@dataclass
class ExtendedKMatrix:
    """
    𝒦̃: the A-period columns of 𝒦 followed by the residue columns
    2πi·Res Ω_ij at nodal preimages selected by pivoted QR.

    Attributes
    ----------
    residues : numpy.ndarray
        Selected residue columns, shape (#N°, #N° − 𝔤).
    points : list of tuple
        `(x, y, disc)` locating each selected column's disc.
    candidates : int
        Number of residue columns before selection.
    pivots : list of int
        Pivot order of the selection.
    """

    residues: np.ndarray
    points: list
    candidates: int
    pivots: list

    def charts(self, P):
        return [charts_at(P, (x, y))[disc] for x, y, disc in self.points]

    def matrix(self, K):
        return np.hstack([K, self.residues])

    def to_json(self):
        return {'residues': _encode(self.residues),
                'points': [[_encode(x), _encode(y), d] for x, y, d in self.points],
                'candidates': self.candidates, 'pivots': list(self.pivots)}

    @classmethod
    def from_json(cls, data):
        return cls(_decode(data['residues']),
                   [(_decode(x), _decode(y), int(d))
                    for x, y, d in data['points']],
                   int(data['candidates']), list(data['pivots']))


@dataclass
class PeriodData:
    """
    Everything the decomposition needs from the transcendental side.

    Attributes
    ----------
    P : BivarPoly
    cycles : CycleSet
        The loops as constructed.
    monomials : tuple of tuple of int
        N°, indexing the rows of `K` and both axes of `S`.
    K : numpy.ndarray
        (#N°, 𝔤) A-periods of Ω_ij in the current basis.
    Khat : numpy.ndarray
        (𝔤, #N°) with Khat·K = Id; ω_i = Σ Khat[i, (kl)]·Ω_kl.
    KB : numpy.ndarray
        (#N°, 𝔤) B-periods of Ω_ij.
    tau, S : numpy.ndarray
    origin : SurfacePoint
    extended : ExtendedKMatrix
        Residue columns for curves with nodal points, else `None`.
    basis : numpy.ndarray
        2𝔤×2𝔤 integer matrix expressing the current (A; B) in terms of
        the constructed loops.
    metadata : dict
    """

    P: BivarPoly = field(repr=False)
    cycles: object = field(repr=False)
    monomials: tuple
    K: np.ndarray
    Khat: np.ndarray
    KB: np.ndarray = None
    tau: np.ndarray = None
    S: np.ndarray = None
    origin: SurfacePoint = None
    extended: ExtendedKMatrix = None
    basis: np.ndarray = None
    metadata: dict = field(default_factory=dict)
    zeta_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.basis is None:
            self.basis = np.eye(2 * self.genus, dtype=int)

    @property
    def genus(self):
        return self.K.shape[1]

    def ktilde(self):
        """The square matrix 𝒦̃ (𝒦 itself for generic curves)."""
        if self.extended is None:
            return self.K
        return self.extended.matrix(self.K)

    def omega(self, x, y):
        """Normalized holomorphic forms ω_i as dx-coefficients, last axis i."""
        return _omega_integrand(self.P, self.monomials)(x, y) @ self.Khat.T

    def loop_terms(self, name):
        """
        The constructed loops and integer weights making up `'A1'`,
        `'B2'`, ... in the current basis.
        """
        g = self.genus
        kind, index = name[:1], name[1:]
        if kind not in ('A', 'B') or not index.isdigit() \
                or not 1 <= int(index) <= g:
            raise CycleSetError(f"no loop named {name!r} in the cycle set")
        row = self.basis[int(index) - 1 + (g if kind == 'B' else 0)]
        loops = self.cycles.A + self.cycles.B
        return [(int(c), loops[k]) for k, c in enumerate(row) if c]

    def to_json(self):
        out = {
            'schema_version': config.schema_version,
            'curve': str(self.P.to_expr()),
            'monomials': [list(m) for m in self.monomials],
            'K': _encode(self.K),
            'Khat': _encode(self.Khat),
            'KB': _encode(self.KB),
            'tau': _encode(self.tau),
            'S': _encode(self.S),
            'origin': None if self.origin is None else
            [_encode(self.origin.x), _encode(self.origin.y)],
            'extended': None if self.extended is None else self.extended.to_json(),
            'basis': self.basis.tolist(),
            'cycles': self.cycles.to_json(),
            'metadata': self.metadata
        }
        return out

    @classmethod
    def from_json(cls, P, data):
        """
        Rebuild from `to_json` output.

        Raises
        ------
        core.exceptions.CurveInputError
            If the document's schema major version differs from ours.
        """
        from curvint.surface import CycleSet
        version = data.get('schema_version', '0')
        if Version(version).major != Version(config.schema_version).major:
            raise CurveInputError(
                f"PeriodData schema {version} is incompatible with "
                f"{config.schema_version}"
            )
        origin = data.get('origin')
        return cls(
            P=P,
            cycles=CycleSet.from_json(data['cycles']),
            monomials=tuple(tuple(m) for m in data['monomials']),
            K=_decode(data['K']),
            Khat=_decode(data['Khat']),
            KB=_decode(data['KB']),
            tau=_decode(data['tau']),
            S=_decode(data['S']),
            origin=None if origin is None else
            SurfacePoint.on(P, _decode(origin[0]), _decode(origin[1])),
            extended=None if data.get('extended') is None else
            ExtendedKMatrix.from_json(data['extended']),
            basis=_basis(data['basis']),
            metadata=dict(data.get('metadata', {}))
        )


def _encode(value):
    if value is None:
        return None
    arr = np.asarray(value, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode(value):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        return np.zeros(arr.shape, dtype=complex)
    out = arr[..., 0] + 1j * arr[..., 1]
    return complex(out) if out.ndim == 0 else out


def _basis(rows):
    basis = np.array(rows, dtype=int)
    return basis if basis.ndim == 2 else basis.reshape(0, 0)


def curve_fingerprint(P):
    """sha256 of the curve's coefficients."""
    text = json.dumps(sorted((list(k), str(c)) for k, c in P.items()))
    return hashlib.sha256(text.encode()).hexdigest()


def cycles_fingerprint(cycles):
    text = json.dumps(cycles.to_json(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


########################################
#           A-PERIODS & 𝒦̂             #
########################################
def _loop_periods(P, monomials, loops):
    integrand = _omega_integrand(P, monomials)
    if not loops:
        return np.zeros((len(monomials), 0), dtype=complex)
    return np.stack([integrate_path(P, integrand, loop).value for loop in loops],
                    axis=-1).reshape(len(monomials), len(loops))


def compute_K(P, cycles):
    """
    A-periods 𝒦_(ij),k = ∮_{A_k} x^i y^j dx / P_y and 𝒦̂ = 𝒦⁻¹ for a
    curve with #N° = 𝔤.

    Returns
    -------
    PeriodData
        With `K` and `Khat` filled.

    Raises
    ------
    core.exceptions.UnsupportedShapeError
        If #N° ≠ number of A-loops (use `compute_K_degenerate`).
    core.exceptions.NumericalError
        If 𝒦 is numerically singular.
    """
    monomials = build_newton(P).interior
    g = len(cycles.A)
    if len(monomials) != g:
        raise UnsupportedShapeError(
            f"#N°={len(monomials)} but {g} A-loops; the curve is degenerate"
        )
    K = _loop_periods(P, monomials, cycles.A)
    if g and np.linalg.cond(K) > 1 / config.rank_tol:
        raise NumericalError(f"𝒦 is numerically singular (cond={np.linalg.cond(K):.3g})")
    Khat = np.linalg.inv(K) if g else np.zeros((0, 0), dtype=complex)
    logger.info("computed %d A-periods of %d forms", g, len(monomials))
    return PeriodData(P, cycles, monomials, K, Khat)


def _residue_candidates(P, monomials):
    columns, points = [], []
    Py = P.numeric().partial('y')
    for beta in degenerate_points(P):
        if branch_analysis(P, beta).genus_beta == 0:
            continue
        charts = charts_at(P, beta)
        for disc, chart in enumerate(charts[:-1]):
            col = [2j * np.pi * chart.times(BivarPoly({m: 1}, exact=False), Py).get(0, 0j)
                   for m in monomials]
            columns.append(col)
            points.append((complex(beta[0]), complex(beta[1]), disc))
    return np.array(columns, dtype=complex).T.reshape(len(monomials), -1), points


def compute_K_degenerate(P, cycles):
    """
    A-periods and 𝒦̂ for a curve whose nodal points cut ℳ(P) below N°.

    𝒦̃ is completed with residue columns 2πi·Res Ω_ij at all but one
    preimage of each nodal point. The #N° − 𝔤 columns kept are picked by
    QR with column pivoting of the residue columns projected off the
    span of 𝒦. 𝒦̂ is the first 𝔤 rows of 𝒦̃⁻¹; the remaining rows define
    auxiliary forms with unit residue and zero A-periods.

    Returns
    -------
    PeriodData
        With `K`, `Khat` and `extended` filled.

    Raises
    ------
    core.exceptions.NumericalError
        If 𝒦̃ cannot be made invertible.
    """
    monomials = build_newton(P).interior
    n, g = len(monomials), len(cycles.A)
    K = _loop_periods(P, monomials, cycles.A)
    residues, points = _residue_candidates(P, monomials)
    need = n - g
    if residues.shape[1] < need:
        raise NumericalError(
            f"nodal analysis gives {residues.shape[1]} residue columns, "
            f"need {need}"
        )
    if g:
        q, _ = np.linalg.qr(K)
        projected = residues - q @ (q.conj().T @ residues)
    else:
        projected = residues
    if need:
        _, r, pivots = scipy.linalg.qr(projected, pivoting=True)
        diag = np.abs(np.diag(r))[:need]
        if diag.size < need or diag[-1] <= config.rank_tol * max(1.0, diag[0]):
            raise NumericalError("rank of 𝒦̃ is below #N°")
        selected = list(pivots[:need])
    else:
        pivots, selected = [], []
    extended = ExtendedKMatrix(residues[:, selected], [points[k] for k in selected],
                               residues.shape[1], [int(p) for p in pivots])
    Ktilde = extended.matrix(K)
    cond = np.linalg.cond(Ktilde)
    if cond > 1 / config.rank_tol:
        raise NumericalError(f"𝒦̃ is numerically singular (cond={cond:.3g})")
    inverse = np.linalg.inv(Ktilde)
    logger.info("degenerate 𝒦̃: %d A-columns, %d residue columns of %d",
                g, need, residues.shape[1])
    return PeriodData(P, cycles, monomials, K, inverse[:g], extended=extended)


########################################
#                 τ                    #
########################################
def compute_tau(P, periods):
    """
    τ_ij = ∮_{B_i} ω_j.

    B-periods are computed into `periods.KB` unless already present.

    Raises
    ------
    core.exceptions.CycleSetError
        If τ is not symmetric within 100·rank_tol or Im τ is not positive
        definite.
    """
    if periods.KB is None:
        periods.KB = _loop_periods(P, periods.monomials, periods.cycles.B)
    tau = periods.KB.T @ periods.Khat.T
    _check_tau(tau)
    return (tau + tau.T) / 2


def _check_tau(tau):
    if not tau.size:
        return
    asym = float(np.max(np.abs(tau - tau.T)))
    scale = max(1.0, float(np.max(np.abs(tau))))
    if asym > 100 * config.rank_tol * scale:
        raise CycleSetError(f"τ is not symmetric (|τ−τᵀ|={asym:.3g}); "
                            "the loops do not form a symplectic basis")
    eig = np.linalg.eigvalsh(((tau + tau.T) / 2).imag)
    if eig.min() <= 0:
        raise CycleSetError(f"Im τ is not positive definite (min eig {eig.min():.3g})")


def _normalize_orientation(periods):
    """Flip loops so that Re 𝒦_ii > 0 and Im τ_ii > 0; return the flips."""
    flips = []
    cycles = periods.cycles
    for i in range(periods.genus):
        if periods.K[i, i].real < 0:
            cycles.A[i] = cycles.A[i].reversed()
            cycles.B[i] = cycles.B[i].reversed()
            periods.K[:, i] *= -1
            periods.KB[:, i] *= -1
            flips.extend([f"A{i + 1}", f"B{i + 1}"])
    periods.Khat = _khat(periods)
    tau = periods.KB.T @ periods.Khat.T
    for i in range(periods.genus):
        if tau[i, i].imag < 0:
            cycles.B[i] = cycles.B[i].reversed()
            periods.KB[:, i] *= -1
            flips.append(f"B{i + 1}")
    return flips


def _khat(periods):
    if periods.extended is None:
        return np.linalg.inv(periods.K)
    return np.linalg.inv(periods.ktilde())[:periods.genus]


########################################
#                  S                   #
########################################
def _distance_to_loops(x, loops):
    best = math.inf
    for loop in loops:
        v = np.array(loop.vertices)
        a, b = v[:-1], v[1:]
        d = b - a
        t = np.clip(((x - a) * d.conj()).real / np.maximum(np.abs(d) ** 2, 1e-300),
                    0, 1)
        best = min(best, float(np.min(np.abs(a + t * d - x))))
    return best


def sample_points(P, cycles, count, rng, exclude=()):
    """
    Pseudo-random curve points away from critical values and loops.

    `exclude` holds `(x, radius)` discs to keep clear of as well.
    """
    crit = critical_values(P)
    radius = 1 + max([abs(c) for c in crit] + [0.0])
    loops = cycles.A + cycles.B
    clearance = 0.5 * min([_distance_to_loops(c, loops) for c in crit] + [radius])
    out = []
    for _ in range(1000 * count):
        if len(out) == count:
            break
        x = radius * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        if crit and min(abs(x - c) for c in crit) < clearance:
            continue
        if loops and _distance_to_loops(x, loops) < clearance:
            continue
        if any(abs(x - e) < max(clearance, r) for e, r in exclude):
            continue
        roots = fiber(P, x)
        out.append(SurfacePoint.on(P, x, roots[int(rng.integers(len(roots)))]))
    if len(out) < count:
        raise NumericalError("could not place sample points away from the loops")
    return out


def fit_forms(P, monomials, points, values):
    """
    Coefficients c with values[m] ≈ Σ c_(ij) x^i y^j / P_y at points[m];
    values may carry a trailing axis of independent right-hand sides.
    """
    Pn = P.numeric()
    x = np.array([p.x for p in points])
    y = np.array([p.y for p in points])
    design = monomial_values(monomials, x, y)
    rhs = np.asarray(values) * Pn.partial('y')(x, y).reshape(-1, *([1] * (np.ndim(values) - 1)))
    coeffs, _, _, _ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = float(np.max(np.abs(design @ coeffs - rhs))) if rhs.size else 0.0
    scale = max(1.0, float(np.max(np.abs(rhs)))) if rhs.size else 1.0
    return coeffs, residual / scale


def compute_S(P, periods, cycles=None, n_extra=4):
    """
    The symmetric matrix S fixing the A-periods of
    B = B^comb + Σ S_(ij),(kl) Ω_ij ⊗ Ω_kl.

    For each A-loop the holomorphic form p₂ ↦ ∮_{A_k} B^comb(·, p₂) is
    sampled at #N° + `n_extra` pseudo-random points and fitted in the Ω
    basis; residue rows at nodal preimages are added for degenerate
    curves. S solves 𝒦̃ᵀ S = −C and is then symmetrized; the asymmetry
    is kept in `metadata['S_asymmetry']`.

    Returns
    -------
    numpy.ndarray
    """
    cycles = cycles or periods.cycles
    monomials = periods.monomials
    n = len(monomials)
    if not n:
        return np.zeros((0, 0), dtype=complex)
    rng = np.random.default_rng(config.seed + 1)
    points = sample_points(P, cycles, n + n_extra, rng)
    x2 = np.array([p.x for p in points])
    y2 = np.array([p.y for p in points])

    def integrand(x1, y1):
        return bergman_comb(P, (x1[..., None], y1[..., None]), (x2, y2))

    rows = []
    for name in [f"A{i + 1}" for i in range(periods.genus)]:
        total = 0j
        for coeff, loop in periods.loop_terms(name):
            total = total + coeff * integrate_path(P, integrand, loop).value
        rows.append(np.asarray(total).reshape(-1))
    if periods.extended is not None:
        for chart in periods.extended.charts(P):
            rows.append(np.array([
                2j * np.pi * chart.times(*bergman_comb_rational(P, p)).get(0, 0j)
                for p in points
            ]))
    values = np.array(rows).T
    C, residual = fit_forms(P, monomials, points, values)
    if residual > math.sqrt(config.quad_tol):
        warnings.warn(f"S collocation residual {residual:.3g}", CurvintWarning)
    S = -np.linalg.solve(periods.ktilde().T, C.T)
    asym = float(np.max(np.abs(S - S.T)))
    logger.info("S asymmetry %.3g", asym)
    if asym > 1e-6 * max(1.0, float(np.max(np.abs(S)))):
        warnings.warn(f"S is not symmetric to 1e-6 (|S−Sᵀ|={asym:.3g})",
                      CurvintWarning)
    periods.metadata['S_asymmetry'] = asym
    periods.metadata['S_fit_residual'] = residual
    return (S + S.T) / 2


def legendre_s_from_g2(G2, Kcal, k):
    """S = G₂/𝒦² + (2/3)(1 + k²) for the Legendre curve."""
    return G2 / Kcal ** 2 + 2 * (1 + k ** 2) / 3


########################################
#             ζ AND ABEL MAP           #
########################################
def _point_key(p):
    if isinstance(p, PunctureInfo):
        return p.label
    if isinstance(p, LocalChart):
        return ('chart', p.label, _round(p.X), _round(p.Y), _round(p.eta))
    return _round(p.x) + _round(p.y)


def _round(z):
    if z is None:
        return (None,)
    return round(complex(z).real, 12), round(complex(z).imag, 12)


def _pole_chart(P, p):
    """The chart of a pole that needs regularization, or `None`."""
    if isinstance(p, PunctureInfo):
        return LocalChart.at_puncture(P, p)
    if isinstance(p, LocalChart):
        return p
    return None


def _regularizing_circle(chart, n_samples=32):
    rho = 0.5 * chart.radius()
    xi = rho * np.exp(2j * np.pi * (np.arange(n_samples) + 0.5) / n_samples)
    return chart.point(xi)


def ds_integrand(P, p, o):
    """
    dS^comb_{p,o} as a dx-coefficient callable.

    Punctures and singular points (given as `PunctureInfo` or as a
    `LocalChart` of one disc) are replaced by the mean of the kernel
    over a circle of half the chart radius; the result equals the
    continued form outside that circle.
    """
    chart = _pole_chart(P, p)
    if chart is not None:
        ring = _regularizing_circle(chart)

        def integrand(x, y):
            x, y = np.asarray(x)[..., None], np.asarray(y)[..., None]
            return np.mean(ds_comb(P, ring, o, (x, y)), axis=-1)

        return integrand

    def integrand(x, y):
        return ds_comb(P, p, o, (x, y))

    return integrand


def _ds_residues(P, periods, p, o):
    pole = _pole_chart(P, p)
    ring = [p] if pole is None else list(zip(*_regularizing_circle(pole)))
    out = []
    for chart in periods.extended.charts(P):
        value = sum(chart.times(*ds_comb_rational(P, q, o)).get(0, 0j)
                    for q in ring) / len(ring)
        out.append(2j * np.pi * value)
    return out


def cycle_integral(periods, integrand, name):
    """∮ integrand·dx over a marked loop `'A1'`, `'B2'`, ... of `periods`."""
    total = 0j
    for coeff, loop in periods.loop_terms(name):
        total = total + coeff * integrate_path(periods.P, integrand, loop).value
    return total


def zeta(P, periods, p):
    """
    ζ(p) − ζ(o), indexed by N°: the coefficients making
    dS_{p,o} = dS^comb_{p,o} + Σ ζ_ij(p)·Ω_ij free of A-periods (and of
    residues at nodal points).

    Parameters
    ----------
    P : BivarPoly
    periods : PeriodData
    p : SurfacePoint, PunctureInfo or LocalChart
        A chart stands for the center of one disc at a singular point.

    Returns
    -------
    numpy.ndarray
    """
    key = _point_key(p)
    if key in periods.zeta_cache:
        return periods.zeta_cache[key]
    o = periods.origin
    if _pole_chart(P, p) is None and _point_key(o) == key:
        value = np.zeros(len(periods.monomials), dtype=complex)
    else:
        integrand = ds_integrand(P, p, o)
        rhs = [cycle_integral(periods, integrand, f"A{i + 1}")
               for i in range(periods.genus)]
        if periods.extended is not None:
            rhs.extend(_ds_residues(P, periods, p, o))
        value = -np.linalg.solve(periods.ktilde().T, np.array(rhs, dtype=complex))
    periods.zeta_cache[key] = value
    return value


def _segments_cross(a, b, c, d):
    """Parameter s ∈ (0, 1) where [a, b] properly crosses [c, d], or `None`."""
    def orient(p, q, r):
        return ((q - p) * (r - p).conjugate()).imag

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if not (o1 * o2 < 0 and o3 * o4 < 0):
        return None
    return o3 / (o3 - o4)


@lru_cache(maxsize=256)
def _loop_vertex_ys(P, loop):
    ys = [_start_y(P, loop)]
    v = loop.vertices
    for a, b in zip(v[:-1], v[1:]):
        ys.append(continue_along(P, a, ys[-1], b))
    return tuple(ys)


def crossed_loop(periods, a, b, ya=None):
    """
    Label of the first marked loop met by the segment [a, b], or `None`.

    Without `ya` any crossing of the loop's x-projection counts. With the
    starting y of the segment, only crossings on the loop's own sheet
    count.
    """
    a, b = complex(a), complex(b)
    P = periods.P
    for loop in periods.cycles.A + periods.cycles.B:
        v = loop.vertices
        ys = _loop_vertex_ys(P, loop) if ya is not None else None
        for k, (c, d) in enumerate(zip(v[:-1], v[1:])):
            s = _segments_cross(a, b, c, d)
            if s is None:
                continue
            if ya is None:
                return loop.label
            x = a + s * (b - a)
            y_path = continue_along(P, a, ya, x)
            y_loop = continue_along(P, c, ys[k], x)
            if abs(y_path - y_loop) < math.sqrt(config.root_tol) * (1 + abs(y_loop)):
                return loop.label
    return None


def _path_ok(P, periods, waypoints, y_target):
    y = periods.origin.y
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        if crossed_loop(periods, a, b, y) is not None:
            return False
        y = continue_along(P, a, y, b)
    return abs(y - y_target) < math.sqrt(config.root_tol) * (1 + abs(y_target))


def _detours(P, periods, x):
    """Waypoint lists from the origin to x, the straight one first."""
    o = periods.origin.x
    yield (o, x)
    crit = critical_values(P)
    for c in crit:
        others = [abs(c - e) for e in crit if e != c]
        r = 0.5 * min(others) if others else 1.0
        for start in range(8):
            for turn in (1, -1):
                angles = [2 * np.pi * (start + turn * 8 * s / 3) / 8 for s in range(3)]
                yield (o,) + tuple(c + r * np.exp(1j * t) for t in angles) + (x,)


def domain_path(P, periods, p):
    """
    A path from the origin to `p` that stays in the fundamental domain:
    the straight segment if it crosses no loop on the loop's sheet and
    ends on p's sheet, otherwise a detour around one critical value.

    Raises
    ------
    core.exceptions.FundamentalDomainError
        If no candidate path qualifies.
    """
    x, y = complex(p.x), complex(p.y)
    for waypoints in _detours(P, periods, x):
        try:
            if _path_ok(P, periods, waypoints, y):
                return PathSpec(waypoints, start_y=periods.origin.y, label='o->p')
        except NumericalError:
            continue
    raise FundamentalDomainError(
        f"no path from the origin reaches ({x:.6g}, {y:.6g}) inside the "
        "fundamental domain; supply a path"
    )


def _origin_path(P, periods, p, path):
    return path if path is not None else domain_path(P, periods, p)


def _check_endpoint(end, p):
    if abs(end.y - complex(p.y)) > math.sqrt(config.root_tol) * max(1.0, abs(end.y)):
        raise FundamentalDomainError(
            f"the path from the origin ends at y={end.y:.6g}, not at the "
            f"requested y={complex(p.y):.6g}; supply a path"
        )


def zeta_path(P, periods, p, path=None):
    """
    ζ(p) − ζ(o) by integrating dζ_ij = (Σ_kl S_(ij),(kl) x^k y^l + C_ij)
    dx / P_y from the origin along `path`.
    """
    C = c_poly(P)
    Py = P.numeric().partial('y')
    S = periods.S

    def integrand(x, y):
        mono = monomial_values(periods.monomials, x, y)
        return (mono @ S.T + C.eval(x, y)) / np.asarray(Py(x, y))[..., None]

    result = integrate_path(P, integrand, _origin_path(P, periods, p, path))
    _check_endpoint(result.end, p)
    return np.asarray(result.value).reshape(-1)


def abel_map(P, periods, p, path=None):
    """
    F(p) = ∫_o^p ω, along `path` or `domain_path(P, periods, p)`.

    `p` may also be a `PunctureInfo` or the `LocalChart` of a disc at a
    singular point: the path then ends at a point of the chart's circle
    reachable without crossing a loop, and the rest is added from the
    series of ω in the local coordinate.

    Raises
    ------
    core.exceptions.FundamentalDomainError
        If no default path stays in the fundamental domain, or `path`
        ends on another sheet.
    """
    chart = _pole_chart(P, p)
    if chart is not None:
        return _abel_to_center(P, periods, chart)
    if _point_key(p) == _point_key(periods.origin) and path is None:
        return np.zeros(periods.genus, dtype=complex)
    result = integrate_path(P, periods.omega, _origin_path(P, periods, p, path))
    _check_endpoint(result.end, p)
    return np.asarray(result.value).reshape(-1)


def _abel_to_center(P, periods, chart, n_terms=32, n_rays=16):
    Py = P.numeric().partial('y')
    expansions = [chart.form_series(BivarPoly({m: 1}, exact=False), Py, n_terms)
                  for m in periods.monomials]
    if any(s.valuation < 0 for s in expansions):
        raise FundamentalDomainError(f"ω has a pole at {chart!r}")
    rho = 0.25 * chart.radius()
    for ray in range(n_rays):
        xi = rho * np.exp(2j * np.pi * ray / n_rays)
        x, y = chart.point(np.array([xi]))
        try:
            head = abel_map(P, periods, SurfacePoint.on(P, x[0], y[0]))
        except FundamentalDomainError:
            continue
        # integrate the ξ-series from ξ back to the center
        tail = np.zeros(len(expansions), dtype=complex)
        for row, s in enumerate(expansions):
            exps = s.valuation + np.arange(len(s.coeffs)) + 1
            tail[row] = -np.sum(s.coeffs * xi ** exps / exps)
        return head + periods.Khat @ tail
    raise FundamentalDomainError(
        f"no path from the origin reaches {chart!r} inside the "
        "fundamental domain"
    )


########################################
#           BASIS CHANGES              #
########################################
def change_cycles(periods, U):
    """
    New periods for the basis (A'; B') = U·(A; B), U = [[α, β], [γ, δ]]:

        𝒦̂' = (αᵀ + τβᵀ)⁻¹ 𝒦̂
        τ'  = (γ + δτ)(α + βτ)⁻¹
        S'  = S − 2πi 𝒦̂ᵀ (α + βτ)⁻¹ β 𝒦̂

    Raises
    ------
    core.exceptions.CycleSetError
        If U is not an integer symplectic matrix.
    """
    g = periods.genus
    U = np.asarray(U)
    if U.shape != (2 * g, 2 * g) or not np.all(U == np.round(U)):
        raise CycleSetError(f"basis change must be a {2 * g}×{2 * g} integer matrix")
    U = np.round(U).astype(int)
    J = np.block([[np.zeros((g, g), int), np.eye(g, dtype=int)],
                  [-np.eye(g, dtype=int), np.zeros((g, g), int)]])
    if not np.array_equal(U @ J @ U.T, J):
        raise CycleSetError("basis change is not symplectic")
    alpha, beta = U[:g, :g], U[:g, g:]
    gamma, delta = U[g:, :g], U[g:, g:]
    tau = periods.tau
    M = alpha.T + tau @ beta.T
    K = periods.K @ M
    Khat = np.linalg.solve(M, periods.Khat)
    tau_new = (gamma + delta @ tau) @ np.linalg.inv(alpha + beta @ tau)
    S = periods.S
    if S is not None:
        S = S - 2j * np.pi * periods.Khat.T @ np.linalg.solve(alpha + beta @ tau, beta) @ periods.Khat
    check = float(np.max(np.abs(Khat @ K - np.eye(g)))) if g else 0.0
    if check > math.sqrt(config.rank_tol):
        warnings.warn(f"𝒦̂'𝒦' differs from the identity by {check:.3g}",
                      CurvintWarning)
    out = replace(periods, K=K, Khat=Khat, KB=K @ tau_new, tau=(tau_new + tau_new.T) / 2,
                  S=S, basis=U @ periods.basis, metadata=dict(periods.metadata),
                  zeta_cache={})
    out.metadata['basis_change_check'] = check
    return out


########################################
#              PIPELINE                #
########################################
def _choose_origin(P, cycles):
    rng = np.random.default_rng(config.seed)
    loops = cycles.A + cycles.B
    for _ in range(1000):
        point = sample_points(P, cycles, 1, rng)[0]
        if not any(winding_number(loop, point.x) for loop in loops):
            return point
    raise NumericalError("could not place the origin outside the loops")


def compute_periods(P, cycles=None, origin=None, with_S=True):
    """
    The full transcendental preparation: 𝒦 (or 𝒦̃), 𝒦̂, τ, S and the
    origin o.

    Parameters
    ----------
    P : BivarPoly
    cycles : CycleSet, optional
        Defaults to `surface.default_cycles_hyperelliptic(P)`.
    origin : SurfacePoint, optional
        Defaults to a pseudo-random point outside every loop.
    with_S : bool, optional

    Returns
    -------
    PeriodData
    """
    cycles = cycles if cycles is not None else default_cycles_hyperelliptic(P)
    n = len(build_newton(P).interior)
    g = genus(P)
    if len(cycles.A) != g or len(cycles.B) != g:
        raise CycleSetError(f"cycle set has {len(cycles.A)} A- and "
                            f"{len(cycles.B)} B-loops, genus is {g}")
    if n == g:
        periods = compute_K(P, cycles)
    else:
        periods = compute_K_degenerate(P, cycles)
    periods.KB = _loop_periods(P, periods.monomials, cycles.B)
    flips = _normalize_orientation(periods)
    periods.tau = compute_tau(P, periods)
    periods.origin = origin or _choose_origin(P, cycles)
    periods.metadata.update({
        'precision': config.precision,
        'seed': config.seed,
        'flips': flips,
        'curve_fingerprint': curve_fingerprint(P),
        'cycles_fingerprint': cycles_fingerprint(cycles),
        'degenerate': periods.extended is not None
    })
    if with_S:
        periods.S = compute_S(P, periods)
    logger.info("periods computed: genus %d, #N°=%d", g, n)
    return periods


########################################
#                RAUCH                 #
########################################
@dataclass
class RauchReport:
    """δ𝒦·𝒦̂ from the residue formula and from central differences."""

    residue: np.ndarray
    finite_difference: np.ndarray
    difference: float


def _variation_form(P, deltaP, monomial):
    """δΩ_kl at fixed x under P → P + δP, as (num, den)."""
    k, l = monomial
    Py, Pyy = P.partial('y'), P.partial('y', 2)
    dPy = deltaP.partial('y')
    mono = BivarPoly({(k, l): 1}, exact=P.exact)
    lower = BivarPoly({(k, l - 1): l}, exact=P.exact) if l else BivarPoly({}, exact=P.exact)
    num = -(deltaP * (lower * Py - mono * Pyy)) - mono * dPy * Py
    return num, Py * Py * Py


def rauch_check(P, deltaP, periods, eps=1e-5):
    """
    Variation of the A-periods under P → P + ε·δP.

    The residue route decomposes δΩ_kl (a second-kind form with poles
    at the branch points) into B_{a,k} blocks plus holomorphic forms and
    reads off its A-periods, an affine function of S. The reference is
    the central difference (𝒦(P + ε·δP) − 𝒦(P − ε·δP)) / 2ε on the same
    loops.

    Raises
    ------
    core.exceptions.UnsupportedShapeError
        If the curve is degenerate or a branch point is not a simple
        ramification (P_x or P_yy vanishing there).
    """
    from curvint.decompose import decompose
    from curvint.forms import RationalOneForm
    if periods.extended is not None:
        raise UnsupportedShapeError("Rauch check needs a non-degenerate curve")
    Pn = P.numeric()
    for x, y in degenerate_points(P):
        scale = max(1.0, Pn.scale())
        if abs(Pn.partial('x')(x, y)) < math.sqrt(config.root_tol) * scale or \
                abs(Pn.partial('y', 2)(x, y)) < math.sqrt(config.root_tol) * scale:
            raise UnsupportedShapeError(
                f"branch point ({x:.6g}, {y:.6g}) is not a simple ramification"
            )
    n = len(periods.monomials)
    if deltaP.is_zero():
        zero = np.zeros((n, n), dtype=complex)
        return RauchReport(zero, zero, 0.0)
    dK = np.zeros_like(periods.K)
    for row, monomial in enumerate(periods.monomials):
        num, den = _variation_form(P, deltaP, monomial)
        dK[row] = decompose(P, periods, RationalOneForm(num, den)).holo
    residue = dK @ periods.Khat
    step = sympy.Rational(1, round(1 / eps)) if P.exact and deltaP.exact else eps
    terms = [periods.loop_terms(f"A{i + 1}") for i in range(periods.genus)]
    if any(len(t) != 1 for t in terms):
        raise UnsupportedShapeError(
            "finite differences need A-loops that are single paths"
        )
    signs = np.array([t[0][0] for t in terms])
    loops = [t[0][1] for t in terms]
    plus = _loop_periods(P + deltaP * step, periods.monomials, loops) * signs
    minus = _loop_periods(P - deltaP * step, periods.monomials, loops) * signs
    fd = (plus - minus) / (2 * float(step)) @ periods.Khat
    diff = float(np.max(np.abs(residue - fd)))
    logger.info("Rauch check: residue vs finite difference %.3g", diff)
    return RauchReport(residue, fd, diff)
