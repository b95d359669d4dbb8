"""
Canonical decomposition of a rational 1-form R(x, y)·dx on the curve and
the evaluation of its integrals.

R is written as

    R = Σ t_{p,k}·B_{p,k} + Σ t_{p,0}·dS_{p,o} + Σ t_i·ω_i,

with t_{p,k} the times of R at its poles, B_{p,k} the second-kind forms
cut out of the Bergman kernel, dS_{p,o} the normalized third-kind forms
and ω_i the normalized holomorphic forms. Every block has a known
integral over the marked loops, which turns complete integrals of R into
finite sums.
"""


__all__ = [
    'b_pk',
    'decompose',
    'Decomposition',
    'find_poles',
    'integrate_complete',
    'integrate_direct',
    'integrate_incomplete',
    'legendre_curve',
    'pi_u_k',
    'Pole',
    'SecondKindBlock',
    'times',
    'Times'
]


import logging
import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
import sympy

from curvint import config
from curvint.algebra import (
    BivarPoly,
    X,
    Y,
    critical_values,
    degenerate_points,
    resultant_y,
    univariate_roots
)
from curvint.core.exceptions import (
    CurveInputError,
    CurvintWarning,
    CycleSetError,
    DegenerateInputError,
    FundamentalDomainError,
    NumericalError,
    PoleSubtractionError
)
from curvint.forms import RationalOneForm, bergman_comb_rational, ds_comb_rational
from curvint.periods import (
    _encode,
    abel_map,
    compute_periods,
    crossed_loop,
    ds_integrand,
    integrate_path,
    monomial_values,
    zeta
)
from curvint.polygon import moduli_space, punctures
from curvint.series import LocalChart, charts_at
from curvint.surface import PathSpec, SurfacePoint, _start_y, continue_along, fiber
from curvint.theta import ThetaContext, regular_odd_characteristic, theta


logger = logging.getLogger(__name__)

_CYCLE_NAME = re.compile(r'^(?:(?P<kind>[AB])(?P<index>\d+)|C\[(?P<label>[^\]]+)\])$')


########################################
#             POLES & TIMES            #
########################################
@dataclass(frozen=True)
class Pole:
    """
    A pole of R·dx with its local coordinate.

    Attributes
    ----------
    label : str
        The puncture label, or `'p0'`, `'p1'`, ... for finite poles.
    chart : series.LocalChart
    point : SurfacePoint, PunctureInfo or LocalChart
        What `periods.zeta` and `periods.abel_map` take for this point:
        a `SurfacePoint` at regular points, the puncture, or the chart
        itself for one disc over a point where P_y vanishes.
    x, y : complex
        The center (`x` is `None` over x = ∞).
    kind : {'point', 'branch', 'puncture'}
    """

    label: str
    chart: LocalChart = field(repr=False, compare=False)
    point: object = field(repr=False, compare=False)
    x: complex = None
    y: complex = None
    kind: str = 'point'

    @property
    def a(self):
        return self.chart.a

    def exclusion_radius(self):
        """x-radius of the disc where the regularized forms are not used."""
        if self.x is None:
            return 0.0
        return (3 * 0.5 * self.chart.radius()) ** self.chart.a

    def to_json(self):
        return {'label': self.label, 'kind': self.kind, 'a': self.a,
                'x': None if self.x is None else _encode(self.x),
                'y': _encode(self.y)}


@dataclass
class Times:
    """
    The times t_{p,k} = Res_p ξ_p^k·R dx of a form at its poles.

    Attributes
    ----------
    poles : list of Pole
    table : dict
        Maps a pole label to `{k: t_{p,k}}` (nonzero entries only).
    """

    poles: list
    table: dict

    def __getitem__(self, key):
        label, k = key
        return self.table.get(label, {}).get(k, 0j)

    def pole(self, label):
        for pole in self.poles:
            if pole.label == label:
                return pole
        raise KeyError(label)

    @property
    def residues(self):
        return {label: t.get(0, 0j) for label, t in self.table.items()}

    def items(self):
        for pole in self.poles:
            for k, t in sorted(self.table[pole.label].items()):
                yield pole, k, t

    def to_json(self):
        return {pole.label: {str(k): _encode(t)
                             for k, t in sorted(self.table[pole.label].items())}
                for pole in self.poles}


def _vanishes(Q, x, y):
    Qn = Q.numeric()
    scale = sum(abs(c) * abs(x) ** i * abs(y) ** j for (i, j), c in Qn.items())
    return abs(Qn(x, y)) <= math.sqrt(config.root_tol) * max(scale, 1e-300)


def _distinct(values):
    out = []
    for v in values:
        if all(abs(v - u) > math.sqrt(config.root_tol) * (1 + abs(u)) for u in out):
            out.append(v)
    return out


def find_poles(P, R):
    """
    The poles of R·dx: points of the curve over the roots of
    Res_y(P, den) where the denominator vanishes, and the punctures where
    the form grows.

    Returns
    -------
    list of Pole

    Raises
    ------
    core.exceptions.DegenerateInputError
        If the denominator shares a factor with P.
    """
    poles = []
    Pn = P.numeric()
    if R.den.degtotal > 0:
        res = resultant_y(P, R.den)
        if res.is_zero:
            raise DegenerateInputError("the form's denominator shares a factor with P")
        lead = Pn.leading_x()
        singular = degenerate_points(P)
        seen = []
        for x0, _ in univariate_roots(res):
            if lead.degx > 0 and abs(lead(x0, 0)) <= config.root_tol * lead.scale():
                continue
            for y0 in _distinct(fiber(P, x0)):
                if not _vanishes(R.den, x0, y0):
                    continue
                near = [b for b in singular
                        if abs(b[0] - x0) + abs(b[1] - y0) < math.sqrt(config.root_tol)]
                center = near[0] if near else (x0, y0)
                if any(abs(center[0] - s[0]) + abs(center[1] - s[1])
                       < math.sqrt(config.root_tol) for s in seen):
                    continue
                seen.append(center)
                for chart in charts_at(P, center):
                    if not chart.times(R.num, R.den):
                        continue
                    label = f"p{sum(1 for p in poles if p.kind != 'puncture')}"
                    if near:
                        poles.append(Pole(label, chart, chart, *center, 'branch'))
                    else:
                        point = SurfacePoint.on(P, *center)
                        poles.append(Pole(label, chart, point, *center, 'point'))
    for punct in punctures(P):
        chart = LocalChart.at_puncture(P, punct)
        if chart.times(R.num, R.den):
            x = None if punct.at_infinity else punct.X
            poles.append(Pole(punct.label, chart, punct, x, punct.Y, 'puncture'))
    logger.info("found %d poles", len(poles))
    return poles


def _circle_times(pole, R, order):
    a = pole.a

    def func(xi, x, y):
        return R(x, y) * a * xi ** (a - 1)

    coeffs = pole.chart.fft_coefficients(func)
    return {k: coeffs[-k - 1] for k in range(order)}


def times(P, R, poles=None, check=True):
    """
    Times of R at each of its poles.

    The series in the canonical coordinate is primary; with `check`, the
    values are compared with a small-circle quadrature and
    disagreements above 10⁻⁶ are flagged with a `CurvintWarning`.

    Returns
    -------
    Times
    """
    poles = find_poles(P, R) if poles is None else poles
    table = {}
    for pole in poles:
        t = pole.chart.times(R.num, R.den)
        if check and t:
            for k, value in _circle_times(pole, R, max(t) + 1).items():
                if abs(value - t.get(k, 0j)) > 1e-6 * max(1.0, abs(value)):
                    warnings.warn(f"t_({pole.label},{k}): series {t.get(k, 0j):.8g} "
                                  f"vs circle {value:.8g}", CurvintWarning)
        table[pole.label] = t
    total = sum(t.get(0, 0j) for t in table.values())
    if abs(total) > math.sqrt(config.root_tol):
        warnings.warn(f"residues of the form sum to {total:.3g}", CurvintWarning)
    return Times(list(poles), table)


########################################
#          SECOND-KIND BLOCKS          #
########################################
@dataclass
class SecondKindBlock:
    """
    B_{p,k} = (1/k)·Res_{q→p} ξ_p(q)^(−k)·B(·, q), split as

        B_{p,k} = B^comb_{p,k} + Σ_(ij) (S·v)_ij·Ω_ij.

    The combinatorial part is algebraic; the block is affine in S.

    Attributes
    ----------
    pole : Pole
    k : int
    v : numpy.ndarray
        v_kl = (1/k)·[ξ^(k−1)] Ω_kl at the pole, indexed by N°.
    """

    P: BivarPoly = field(repr=False)
    pole: Pole
    k: int
    v: np.ndarray
    monomials: tuple = field(repr=False)

    def comb(self, x, y):
        """dx-coefficient of B^comb_{p,k} at (x, y)."""
        xs, ys = np.broadcast_arrays(np.asarray(x, dtype=complex),
                                     np.asarray(y, dtype=complex))
        out = np.empty(xs.shape, dtype=complex)
        for idx in np.ndindex(xs.shape):
            num, den = bergman_comb_rational(self.P, (xs[idx], ys[idx]))
            series = self.pole.chart.form_series(num, den, self.k + 2)
            out[idx] = series.coefficient(self.k - 1) / self.k
        return out if out.ndim else complex(out)

    def eval(self, x, y, S):
        Py = self.P.numeric().partial('y')
        omega = monomial_values(self.monomials, x, y) / np.asarray(Py(x, y))[..., None]
        return self.comb(x, y) + omega @ (S @ self.v)

    def to_json(self):
        return {'pole': self.pole.label, 'k': self.k, 'v': _encode(self.v)}


def b_pk(P, periods, pole, k):
    """
    The second-kind block B_{p,k}.

    Raises
    ------
    core.exceptions.CurveInputError
        If k < 1 (the k = 0 term is the third-kind form).
    """
    if k < 1:
        raise CurveInputError("B_{p,k} needs k ≥ 1; k = 0 is the third-kind term")
    Py = P.numeric().partial('y')
    v = np.array([
        pole.chart.form_series(BivarPoly({m: 1}, exact=False), Py, k + 2)
        .coefficient(k - 1) / k
        for m in periods.monomials
    ], dtype=complex)
    return SecondKindBlock(P, pole, k, v, periods.monomials)


########################################
#            DECOMPOSITION             #
########################################
@dataclass
class Decomposition:
    """
    The canonical decomposition of a rational form.

    Attributes
    ----------
    source : RationalOneForm
    times : Times
    blocks : list of tuple of (complex, SecondKindBlock)
        `(t_{p,k}, B_{p,k})` for k ≥ 1.
    third_kind : dict
        Pole label → t_{p,0}.
    base, w : numpy.ndarray
        The coefficients of P_y·R̃ on N° are `base − S·w`.
    residual : numpy.ndarray
        P_y·R̃ on N° at the numeric S.
    holo : numpy.ndarray
        t_i = Σ_kl residual_kl·𝒦_(kl),i.
    support_residual : float
        Size of P_y·R̃ outside N°, relative to its values.
    """

    P: BivarPoly = field(repr=False)
    periods: object = field(repr=False)
    source: RationalOneForm
    times: Times
    blocks: list
    third_kind: dict
    base: np.ndarray
    w: np.ndarray
    residual: np.ndarray
    holo: np.ndarray
    support_residual: float = 0.0

    def residual_form(self):
        """R̃ as a rational form Σ c_ij x^i y^j dx / P_y."""
        num = BivarPoly(dict(zip(self.periods.monomials, self.residual)), exact=False)
        return RationalOneForm(num, self.P.numeric().partial('y'), label='R~')

    def third_kind_form(self, label):
        """dx-coefficient callable of dS_{p,o} for the pole `label`."""
        pole = self.times.pole(label)
        kernel = ds_integrand(self.P, pole.point, self.periods.origin)
        z = zeta(self.P, self.periods, pole.point)
        Py = self.P.numeric().partial('y')
        monomials = self.periods.monomials

        def integrand(x, y):
            omega = monomial_values(monomials, x, y) / np.asarray(Py(x, y))[..., None]
            return kernel(x, y) + omega @ z

        return integrand

    def eval(self, x, y):
        """The reassembled dx-coefficient Σ blocks + Σ t_i ω_i at (x, y)."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        total = self.periods.omega(x, y) @ self.holo
        for t, block in self.blocks:
            total = total + t * block.eval(x, y, self.periods.S)
        for label, t in self.third_kind.items():
            total = total + t * self.third_kind_form(label)(x, y)
        return total

    __call__ = eval

    def affine_holo(self):
        """
        `(constant, slope)` with t_i = constant_i − Σ slope[i, kl, mn]·S_(kl),(mn).
        """
        K = self.periods.K
        return self.base @ K, np.einsum('ki,m->ikm', K, self.w)

    def to_json(self):
        constant, _ = self.affine_holo()
        return {
            'schema_version': config.schema_version,
            'form': self.source.to_json(),
            'poles': [p.to_json() for p in self.times.poles],
            'times': self.times.to_json(),
            'third_kind': {k: _encode(t) for k, t in self.third_kind.items()},
            'blocks': [dict(b.to_json(), t=_encode(t)) for t, b in self.blocks],
            'holo': _encode(self.holo),
            'residual': _encode(self.residual),
            'affine_in_S': {
                'expression': 't_i = sum_kl base_kl K[kl,i] - sum_kl,mn K[kl,i] S[kl,mn] w_mn',
                'base': _encode(self.base),
                'w': _encode(self.w),
                'constant': _encode(constant)
            },
            'support_residual': self.support_residual
        }


def _diagnose(poles, func):
    """The pole and order where `func`·dx keeps the largest polar part."""
    worst, where = 0.0, (None, None)
    for pole in poles:
        a = pole.a
        coeffs = pole.chart.fft_coefficients(
            lambda xi, x, y, a=a: func(x, y) * a * xi ** (a - 1), n_samples=64)
        for power, c in coeffs.items():
            if power < 0 and abs(c) > worst:
                worst, where = abs(c), (pole.label, -power - 1)
    return worst, where


def _reduce_exact(P, R):
    """
    P_y·R reduced modulo P in exact arithmetic, as `{(i, j): c}`, or
    `None` when P_y·R is not a polynomial or P_d(x) is not constant.
    """
    if not (P.exact and R.num.exact and R.den.exact) or P.leading_x().degx > 0:
        return None
    gens = (Y, X)
    quotient, remainder = sympy.div(
        sympy.Poly(P.partial('y').to_expr() * R.num.to_expr(), *gens),
        sympy.Poly(R.den.to_expr(), *gens))
    if not remainder.is_zero:
        return None
    _, reduced = sympy.div(quotient, sympy.Poly(P.to_expr(), *gens))
    return {(i, j): c for (j, i), c in reduced.terms()}


def _reduction_radius(P, singular):
    """
    A radius |x| = ρ past every critical value and inside the
    regularizing circles of the punctures over x = ∞, as far as possible
    from the |x| of `singular`.
    """
    top = max([1.0] + [abs(c) for c in critical_values(P)])
    radii = np.linspace(1.75 * top, 3.5 * top, 15)
    if not singular:
        return float(radii[0])
    gaps = np.min(np.abs(radii[:, None] - np.abs(np.asarray(singular))[None, :]), axis=1)
    return float(radii[np.argmax(gaps)])


def _reduce_on_circle(P, func, degx, rho, n_extra):
    """
    The polynomial Σ c_ij x^i y^j with j < deg_y P that `func` equals on
    the curve, read off the circle |x| = ρ: interpolation in y across each
    fiber, then an FFT in x.

    Returns
    -------
    scaled : numpy.ndarray
        `scaled[i, j] = c_ij·ρ^i`.
    scale : float
        Largest |func| on the circle, at least 1.
    """
    n = max(16, degx + 1 + n_extra)
    d = P.degy
    xs = rho * np.exp(2j * np.pi * np.arange(n) / n)
    ys = [fiber(P, x) for x in xs]
    if any(len(row) != d for row in ys):
        raise NumericalError(f"degenerate fiber on the reduction circle |x|={rho:.6g}")
    ys = np.array(ys, dtype=complex)
    values = np.asarray(func(np.repeat(xs[:, None], d, axis=1), ys), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"P_y·R̃ is not finite on the reduction circle |x|={rho:.6g}")
    vander = ys[:, :, None] ** np.arange(d)
    in_y = np.linalg.solve(vander, values[..., None])[..., 0]
    scaled = np.fft.fft(in_y, axis=0) / n
    return scaled, max(1.0, float(np.max(np.abs(values))))


def decompose(P, periods, R, poles=None, n_extra=8):
    """
    Decompose R·dx into second-kind blocks, third-kind forms and
    holomorphic forms.

    R̃ = R − Σ t_{p,k} B_{p,k} − Σ t_{p,0} dS_{p,o} is holomorphic, so
    P_y·R̃ reduces modulo P to a polynomial supported on N°. Without poles
    the reduction is exact; otherwise it is read off a circle in x past
    the critical values. Support outside N° above 10⁻⁶ (relative) means
    some polar part was not removed.

    Parameters
    ----------
    P : BivarPoly
    periods : periods.PeriodData
        With S filled.
    R : RationalOneForm
    poles : list of Pole, optional
    n_extra : int, optional
        Samples on the reduction circle beyond the x-degree of N°.

    Returns
    -------
    Decomposition

    Raises
    ------
    core.exceptions.PoleSubtractionError
        If R̃ is not holomorphic, naming the pole and order that remain.
    core.exceptions.NumericalError
        If P_y·R̃ cannot be evaluated on the reduction circle.
    """
    T = times(P, R, poles)
    blocks, third = [], {}
    for pole, k, t in T.items():
        if k == 0:
            third[pole.label] = t
        else:
            blocks.append((t, b_pk(P, periods, pole, k)))
    o = periods.origin
    kernels = {label: ds_integrand(P, T.pole(label).point, o) for label in third}

    def polar(x, y):
        total = 0
        for t, block in blocks:
            total = total + t * block.comb(x, y)
        for label, t in third.items():
            total = total + t * kernels[label](x, y)
        return total

    monomials = periods.monomials
    Py = P.numeric().partial('y')
    exact = _reduce_exact(P, R) if not T.poles else None
    if exact is not None:
        sizes = {m: abs(complex(c)) for m, c in exact.items()}
        support_residual = max([0.0] + [s for m, s in sizes.items() if m not in monomials]) \
            / max([1.0] + list(sizes.values()))
        coeffs = np.array([complex(exact.get(m, 0)) for m in monomials], dtype=complex)
    else:
        singular = [pole.x for pole in T.poles if pole.x is not None]
        if o.x is not None:
            singular.append(o.x)
        rho = _reduction_radius(P, singular)
        degx = max([i for i, _ in monomials], default=0)
        scaled, scale = _reduce_on_circle(
            P, lambda x, y: Py(x, y) * (R(x, y) - polar(x, y)), degx, rho, n_extra)
        inside = np.zeros(scaled.shape, dtype=bool)
        for i, j in monomials:
            inside[i, j] = True
        support_residual = float(np.max(np.abs(scaled[~inside]), initial=0.0)) / scale
        coeffs = np.array([scaled[i, j] / rho ** i for i, j in monomials], dtype=complex)
    logger.debug("P_y·R̃ outside N°: %.3g", support_residual)
    if support_residual > 1e-6:
        def remainder(xq, yq):
            omega = monomial_values(monomials, xq, yq) / np.asarray(Py(xq, yq))[..., None]
            return R(xq, yq) - polar(xq, yq) - omega @ coeffs

        _, (label, order) = _diagnose(find_poles(P, R), remainder)
        raise PoleSubtractionError(
            f"P_y·R̃ has support outside N° (relative size {support_residual:.3g})",
            label, order
        )
    base = coeffs - sum((t * zeta(P, periods, T.pole(label).point)
                         for label, t in third.items()),
                        np.zeros(len(monomials), dtype=complex))
    w = sum((t * block.v for t, block in blocks),
            np.zeros(len(monomials), dtype=complex))
    residual = base - periods.S @ w if len(monomials) else base
    if periods.extended is not None:
        _, basis = moduli_space(P)
        basis = np.asarray(basis, dtype=complex)
        outside = residual - basis @ (np.linalg.pinv(basis) @ residual)
        if np.max(np.abs(outside), initial=0.0) > 1e-6 * max(1.0, np.max(np.abs(residual))):
            warnings.warn("P_y·R̃ is not in ℳ(P) to 1e-6", CurvintWarning)
    holo = residual @ periods.K
    logger.info("decomposed form: %d second-kind blocks, %d third-kind terms",
                len(blocks), len(third))
    return Decomposition(P, periods, R, T, blocks, third, base, w, residual,
                         holo, support_residual)


########################################
#              INTEGRALS               #
########################################
def _parse_cycle(name, genus):
    match = _CYCLE_NAME.match(name.strip())
    if match is None:
        raise CycleSetError(f"{name!r} is not a marked loop (A<i>, B<i> or C[label])")
    if match['label'] is not None:
        return 'C', match['label']
    index = int(match['index'])
    if not 1 <= index <= genus:
        raise CycleSetError(f"{name!r} is outside the marked basis of genus {genus}")
    return match['kind'], index - 1


def integrate_complete(P, periods, decomposition, gamma):
    """
    ∮_γ R dx for γ an integer combination of marked loops.

    Each loop contributes from the table of block periods:

        loop    B_{p,k}              dS_{p,o}                 ω_j
        A_i     0                    0                        δ_ij
        B_i     2πi (𝒦̂·v_{p,k})_i    2πi (F_i(p) − F_i(o))    τ_ij
        C_q     0                    2πi δ_pq                 0

    Parameters
    ----------
    gamma : dict
        Loop name (`'A1'`, `'B2'`, `'C[inf0]'`) → integer coefficient.

    Raises
    ------
    core.exceptions.CycleSetError
        If a name is not a loop of the marked basis.
    """
    d = decomposition
    known = {p.label for p in d.times.poles} | set(periods.cycles.C)
    total = 0j
    abel = {}
    for name, coeff in gamma.items():
        if int(coeff) != coeff:
            raise CycleSetError(f"coefficient of {name} is not an integer")
        kind, index = _parse_cycle(name, periods.genus)
        if kind == 'A':
            value = d.holo[index]
        elif kind == 'B':
            value = (periods.tau @ d.holo)[index]
            for t, block in d.blocks:
                value += t * 2j * np.pi * (periods.Khat @ block.v)[index]
            for label, t in d.third_kind.items():
                if label not in abel:
                    abel[label] = abel_map(P, periods, d.times.pole(label).point)
                value += t * 2j * np.pi * abel[label][index]
        else:
            if index not in known:
                raise CycleSetError(f"no pole or puncture labeled {index!r}")
            value = 2j * np.pi * d.third_kind.get(index, 0j)
        total += int(coeff) * value
    return complex(total)


def integrate_direct(P, R, path):
    """∫ R dx along `path` by adaptive quadrature."""
    return integrate_path(P, R.eval, path).value


def _arc_endpoints(P, periods, decomposition, arc):
    if arc.closed:
        raise CurveInputError("an arc must be an open path; use integrate_complete")
    y = _start_y(P, arc)
    start = SurfacePoint.on(P, arc.waypoints[0], y)
    for a, b in zip(arc.waypoints[:-1], arc.waypoints[1:]):
        label = crossed_loop(periods, a, b, y)
        if label is not None:
            raise FundamentalDomainError(f"the arc crosses loop {label}")
        y = continue_along(P, a, y, b)
    end = SurfacePoint.on(P, arc.waypoints[-1], y)
    for pole in decomposition.times.poles:
        if pole.x is None:
            continue
        for pt in (start, end):
            if abs(pt.x - pole.x) + abs(pt.y - pole.y) < math.sqrt(config.root_tol):
                raise CurveInputError(
                    f"arc endpoint ({pt.x:.6g}, {pt.y:.6g}) is the pole "
                    f"{pole.label}; the integral diverges"
                )
    return start, end


class _LogRatioWalk:
    """ln Θ_χ(F(q) − F(p)) − ln Θ_χ(F(q)) continued along an arc."""

    max_depth = 12

    def __init__(self, P, periods, ctx, chi, Fp):
        self.P, self.periods = P, periods
        self.ctx, self.chi, self.Fp = ctx, chi, Fp

    def ratio(self, F):
        return theta(self.ctx, F - self.Fp, self.chi) / theta(self.ctx, F, self.chi)

    def piece(self, xa, ya, Fa, ra, xb, depth=0):
        step = integrate_path(self.P, self.periods.omega,
                              PathSpec((xa, xb), start_y=ya))
        Fb, yb = Fa + step.value, step.end.y
        rb = self.ratio(Fb)
        dphi = float(np.angle(rb / ra))
        if abs(dphi) > np.pi / 4 and depth < self.max_depth:
            xm = 0.5 * (xa + xb)
            ym, Fm, rm, phi1 = self.piece(xa, ya, Fa, ra, xm, depth + 1)
            yb, Fb, rb, phi2 = self.piece(xm, ym, Fm, rm, xb, depth + 1)
            return yb, Fb, rb, phi1 + phi2
        return yb, Fb, rb, dphi

    def run(self, arc, start, F_start, pieces=16):
        y, F = start.y, F_start
        r0 = r = self.ratio(F)
        phase = 0.0
        for a, b in zip(arc.waypoints[:-1], arc.waypoints[1:]):
            for s in range(pieces):
                xa = a + (b - a) * s / pieces
                xb = a + (b - a) * (s + 1) / pieces
                y, F, r, dphi = self.piece(xa, y, F, r, xb)
                phase += dphi
        return math.log(abs(r) / abs(r0)) + 1j * phase


def _third_kind_arc(P, periods, decomposition, label, arc, start, method):
    pole = decomposition.times.pole(label)
    if method == 'theta' and periods.genus > 0:
        try:
            ctx = ThetaContext(periods.tau)
            chi = regular_odd_characteristic(ctx)
            Fp = abel_map(P, periods, pole.point)
            F_start = abel_map(P, periods, start)
            walk = _LogRatioWalk(P, periods, ctx, chi, Fp)
            return walk.run(arc, start, F_start)
        except FundamentalDomainError as e:
            logger.info("theta route unavailable for %s (%s); using quadrature",
                        label, e)
    return integrate_path(P, decomposition.third_kind_form(label), arc).value


def integrate_incomplete(P, periods, decomposition, arc, method='theta'):
    """
    ∫ R dx along an open arc inside the fundamental domain.

    The holomorphic part gives t·(F(p₂) − F(p₁)); each B_{p,k} gives
    (1/k)·Res_p ξ^(−k)·dS_{p₂,p₁}; each dS_{p,o} gives the continued
    logarithm of Θ_χ(F(q) − F(p)) / Θ_χ(F(q) − F(o)) between the ends.
    With `method='quadrature'` the third-kind terms are integrated
    directly instead.

    Raises
    ------
    core.exceptions.FundamentalDomainError
        If the arc crosses a marked loop.
    core.exceptions.CurveInputError
        If an end of the arc is a pole of R.
    """
    if method not in ('theta', 'quadrature'):
        raise CurveInputError(f"unknown method {method!r}")
    d = decomposition
    start, end = _arc_endpoints(P, periods, d, arc)
    dF = integrate_path(P, periods.omega, arc).value
    total = complex(np.asarray(dF).reshape(-1) @ d.holo) if periods.genus else 0j
    if d.blocks:
        dz = zeta(P, periods, end) - zeta(P, periods, start)
        num, den = ds_comb_rational(P, end, start)
        for t, block in d.blocks:
            series = block.pole.chart.form_series(num, den, block.k + 2)
            total += t * (series.coefficient(block.k - 1) / block.k + dz @ block.v)
    for label, t in d.third_kind.items():
        total += t * _third_kind_arc(P, periods, d, label, arc, start, method)
    return complex(total)


########################################
#         LEGENDRE THIRD KIND          #
########################################
def _rational(value):
    if isinstance(value, (int, sympy.Rational)):
        return sympy.Rational(value)
    return sympy.Rational(str(value))


def legendre_curve(k):
    """y² − (1 − x²)(1 − k²x²) with exact coefficients."""
    k = _rational(k)
    return BivarPoly.from_expr(Y ** 2 - (1 - X ** 2) * (1 - k ** 2 * X ** 2))


def pi_u_k(u, k, periods=None):
    """
    The complete elliptic integral of the third kind

        Π(u, k) = ∫_0^1 dx / ((1 − u x²)·√((1 − x²)(1 − k²x²))),

    as a quarter of ∮_A dx / ((1 − u x²) y) on the Legendre curve, from
    the decomposition of that form.

    Raises
    ------
    core.exceptions.CurveInputError
        If x₀ = 1/√u is a branch value.
    """
    P = legendre_curve(k)
    u_exact = _rational(u)
    if u_exact > 0:
        x0 = 1 / math.sqrt(float(u_exact))
        for b in (1.0, 1 / float(_rational(k))):
            if abs(x0 - b) < math.sqrt(config.root_tol):
                raise CurveInputError(f"u={u} puts the pole on the branch value {b:.6g}")
    periods = periods if periods is not None else compute_periods(P)
    den = BivarPoly.from_expr((1 - u_exact * X ** 2) * Y)
    R = RationalOneForm(BivarPoly({(0, 0): 1}), den, label='Pi')
    d = decompose(P, periods, R)
    return integrate_complete(P, periods, d, {'A1': 1}) / 4
