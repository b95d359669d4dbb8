"""
Riemann theta functions with half-integer characteristics, their
derivatives at the origin, the classical genus-1 series (AGM values of
the complete elliptic integrals, Eisenstein G₂, the nome), the
hyperelliptic canonical divisor and the prime form.

Characteristics are pairs `(alpha, beta)` of 0/1 tuples. With them

    Θ_χ(u) = Σ_n exp(2πi(n + β/2, u) + πi(n, α) + πi(n, τβ) + πi(n, τn)),

a shift of Θ by the half period (α + τβ)/2 times an exponential factor.
"""


__all__ = [
    'agm',
    'bergman_from_theta_check',
    'canonical_H',
    'CanonicalDivisorData',
    'classical_series',
    'ClassicalSeries',
    'elliptic_E',
    'elliptic_K',
    'g2_from_q',
    'is_odd',
    'k_from_nome',
    'nome_from_k',
    'odd_characteristics',
    'prime_form',
    'regular_odd_characteristic',
    'theta',
    'theta2',
    'theta3',
    'theta4',
    'theta_derivs',
    'theta_jet',
    'ThetaContext'
]


import itertools
import logging
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import mpmath
import numpy as np

from curvint import config
from curvint.algebra import BivarPoly
from curvint.core.exceptions import (
    CurveInputError,
    CurvintWarning,
    CycleSetError,
    EvaluationError,
    NumericalError
)
from curvint.forms import bergman_comb
from curvint.polygon import genus


logger = logging.getLogger(__name__)

ClassicalSeries = namedtuple('ClassicalSeries', ['K', 'E', 'G2', 'q'])


########################################
#          THETA WITH CHARACTERISTICS  #
########################################
class ThetaContext:
    """
    A Siegel matrix τ and the lattice box the theta sums run over.

    The box radius R is the smallest integer with
    exp(−π λ_min(Im τ) R²) below a tenth of the target precision,
    capped at `config.theta_max_radius`.

    Parameters
    ----------
    tau : array_like
        g×g symmetric matrix with positive definite imaginary part.
    tol : float, optional
        Target absolute precision. Defaults to 10^(−config.precision).

    Raises
    ------
    core.exceptions.CycleSetError
        If τ is not a Siegel matrix.
    """

    def __init__(self, tau, tol=None):
        tau = np.atleast_2d(np.asarray(tau, dtype=complex))
        if tau.shape[0] != tau.shape[1] or not tau.size:
            raise CycleSetError("τ must be a non-empty square matrix")
        if np.max(np.abs(tau - tau.T)) > 1e-8 * max(1.0, np.max(np.abs(tau))):
            raise CycleSetError("τ is not symmetric")
        self.tau = (tau + tau.T) / 2
        self.genus = tau.shape[0]
        self.lam = float(np.linalg.eigvalsh(self.tau.imag).min())
        if self.lam <= 0:
            raise CycleSetError("Im τ is not positive definite")
        self.tol = 10.0 ** -config.precision if tol is None else tol
        radius = math.ceil(math.sqrt(math.log(10 / self.tol) / (math.pi * self.lam)))
        if radius > config.theta_max_radius:
            warnings.warn(f"theta truncation radius {radius} capped at "
                          f"{config.theta_max_radius}", CurvintWarning)
            radius = config.theta_max_radius
        self.radius = radius
        span = range(-radius, radius + 1)
        self.lattice = np.array(list(itertools.product(span, repeat=self.genus)),
                                dtype=float)
        logger.debug("theta lattice radius %d (%d points)", radius,
                     len(self.lattice))

    def __repr__(self):
        return f"ThetaContext(genus={self.genus}, radius={self.radius})"

    def _centered(self, u):
        """Lattice box shifted to the dominant terms for Im u."""
        shift = np.linalg.solve(self.tau.imag, np.asarray(u).imag)
        return self.lattice - np.round(shift)


def _characteristic(chi, g):
    if chi is None:
        return np.zeros(g), np.zeros(g)
    alpha, beta = chi
    if len(alpha) != g or len(beta) != g:
        raise CurveInputError(f"characteristic {chi!r} does not have genus {g}")
    return np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)


def theta_jet(ctx, u, chi=None, order=0):
    """
    Θ_χ(u) and its u-derivatives up to `order` (≤ 3).

    Returns
    -------
    list of numpy.ndarray
        `[value, gradient (g,), hessian (g, g), third (g, g, g)]`,
        truncated after `order`.
    """
    u = np.asarray(u, dtype=complex).reshape(ctx.genus)
    alpha, beta = _characteristic(chi, ctx.genus)
    n = ctx._centered(u)
    v = n + beta / 2
    tau = ctx.tau
    phase = (2j * np.pi * (v @ u) + 1j * np.pi * (n @ alpha)
             + 1j * np.pi * (n @ (tau @ beta))
             + 1j * np.pi * np.einsum('ni,ij,nj->n', n, tau, n))
    weights = np.exp(phase)
    if not np.all(np.isfinite(weights)):
        raise EvaluationError(f"theta sum overflows at u={u}")
    w = 2j * np.pi * v
    out = [weights.sum()]
    if order >= 1:
        out.append(w.T @ weights)
    if order >= 2:
        out.append(np.einsum('n,ni,nj->ij', weights, w, w))
    if order >= 3:
        out.append(np.einsum('n,ni,nj,nk->ijk', weights, w, w, w))
    return out


def theta(ctx, u, chi=None):
    """Θ_χ(u, τ); the plain Riemann theta function for `chi=None`."""
    return complex(theta_jet(ctx, u, chi)[0])


def is_odd(chi):
    alpha, beta = chi
    return sum(a * b for a, b in zip(alpha, beta)) % 2 == 1


def odd_characteristics(g):
    """
    All odd half-integer characteristics of genus g, in lexicographic
    order of (α, β); there are 2^(g−1)(2^g − 1) of them.
    """
    if g < 1:
        raise CurveInputError("odd characteristics need genus ≥ 1")
    bits = list(itertools.product((0, 1), repeat=g))
    return [(a, b) for a in bits for b in bits if is_odd((a, b))]


def theta_derivs(ctx, chi):
    """
    Θ′_χ(0) and Θ‴_χ(0) for an odd characteristic.

    Raises
    ------
    core.exceptions.CurveInputError
        If χ is even.
    core.exceptions.NumericalError
        If χ is singular (Θ′_χ(0) ≈ 0).
    """
    if not is_odd(chi):
        raise CurveInputError(f"characteristic {chi!r} is even")
    value, grad, _, third = theta_jet(ctx, np.zeros(ctx.genus), chi, 3)
    if abs(value) > 1e3 * ctx.tol * max(1.0, float(np.max(np.abs(grad)))):
        warnings.warn(f"odd theta does not vanish at 0 (|Θ_χ(0)|={abs(value):.3g})",
                      CurvintWarning)
    if np.linalg.norm(grad) <= math.sqrt(ctx.tol):
        raise NumericalError(f"odd characteristic {chi!r} is singular")
    return grad, third


def regular_odd_characteristic(ctx, skip=0):
    """
    The lexicographically first odd characteristic with Θ′_χ(0) ≠ 0,
    or the next ones when `skip` > 0.
    """
    found = 0
    for chi in odd_characteristics(ctx.genus):
        grad = theta_jet(ctx, np.zeros(ctx.genus), chi, 1)[1]
        if np.linalg.norm(grad) > math.sqrt(ctx.tol):
            if found == skip:
                return chi
            found += 1
    raise NumericalError("no regular odd characteristic found")


########################################
#      CLASSICAL GENUS-ONE SERIES      #
########################################
def _number(value):
    """An mpmath result as a float when real, else as a complex."""
    value = complex(value)
    return value.real if value.imag == 0 else value


def _real_modulus(k):
    return np.isreal(k) and abs(k) < 1


def agm(a, b):
    with mpmath.workdps(config.precision + 5):
        return _number(mpmath.agm(a, b))


def elliptic_K(k):
    """K(k) = π / (2·agm(1, k′)), with the parameter m = k²."""
    with mpmath.workdps(config.precision + 5):
        value = complex(mpmath.ellipk(mpmath.mpmathify(k) ** 2))
    return value.real if _real_modulus(k) else value


def elliptic_E(k):
    with mpmath.workdps(config.precision + 5):
        value = complex(mpmath.ellipe(mpmath.mpmathify(k) ** 2))
    return value.real if _real_modulus(k) else value


def _jacobi_theta(n, q):
    if abs(q) >= 1:
        raise CurveInputError(f"nome |q|={abs(q):.6g} is out of the series domain")
    with mpmath.workdps(config.precision + 5):
        return _number(mpmath.jtheta(n, 0, q))


def theta2(q):
    """θ₂(q) = 2 Σ_{n≥0} q^((n+1/2)²)."""
    return _jacobi_theta(2, q)


def theta3(q):
    """θ₃(q) = 1 + 2 Σ_{n≥1} q^(n²)."""
    return _jacobi_theta(3, q)


def theta4(q):
    return _jacobi_theta(4, q)


def k_from_nome(q):
    """k = θ₂(q)² / θ₃(q)²."""
    if abs(q) >= 1:
        raise CurveInputError(f"nome |q|={abs(q):.6g} is out of the series domain")
    with mpmath.workdps(config.precision + 5):
        return _number(mpmath.kfrom(q=q))


def nome_from_k(k):
    """
    The nome q = exp(−πK′/K).

    Raises
    ------
    core.exceptions.CurveInputError
        If |k| ≥ 1.
    """
    if abs(k) >= 1:
        raise CurveInputError(f"modulus |k|={abs(k):.6g} is out of the series domain")
    if k == 0:
        return 0.0
    with mpmath.workdps(config.precision + 5):
        return _number(mpmath.qfrom(k=k))

def g2_from_q(q, terms=200):
    """
    Eisenstein G₂ = (π²/3)(1 − 24 Σ σ₁(n) q^(2n)) for the nome q = e^(iπτ).
    """
    if abs(q) >= 1:
        raise CurveInputError(f"nome |q|={abs(q):.6g} is out of the series domain")
    total = 0
    q2 = q * q
    for n in range(1, terms):
        term = n * q2 ** n / (1 - q2 ** n)
        total += term
        if abs(term) < 1e-18:
            break
    return np.pi ** 2 / 3 * (1 - 24 * total)


def classical_series(k=None, q=None):
    """
    K, E, G₂ and the nome from either the modulus k or the nome q.

    q is the Jacobi nome exp(−πK′/K). G₂ is evaluated at √q, the nome
    e^(iπτ) of τ = iK′/(2K) for the default Legendre loops, so that
    G₂/(4K²) = 2E/K − 5/3 + k²/3.

    Returns
    -------
    ClassicalSeries
    """
    if (k is None) == (q is None):
        raise CurveInputError("give exactly one of k and q")
    if k is None:
        if abs(q) >= 1:
            raise CurveInputError(f"nome |q|={abs(q):.6g} is out of the series domain")
        k = k_from_nome(q)
    else:
        q = nome_from_k(k)
    K = elliptic_K(k)
    return ClassicalSeries(K, elliptic_E(k), g2_from_q(np.sqrt(q)), q)


########################################
#          CANONICAL DIVISOR           #
########################################
@dataclass
class CanonicalDivisorData:
    """
    H ∈ ℳ(P) with H dx/P_y vanishing doubly at `points`.

    Attributes
    ----------
    H : BivarPoly
    points : list of tuple of complex
        The g − 1 divisor points.
    indices : list of int
        Indices of the chosen branch roots in the sorted order.
    tangency : float
        Largest |H_x P_y − H_y P_x| at the divisor points.
    """

    H: BivarPoly
    points: list = field(default_factory=list)
    indices: list = field(default_factory=list)
    tangency: float = 0.0

    def nu(self, P, x, y):
        """dx-coefficient of ν = H dx / P_y."""
        return self.H(x, y) / P.numeric().partial('y')(x, y)


def canonical_H(P):
    """
    The canonical-divisor polynomial of a hyperelliptic curve, or of a
    curve of genus ≤ 1.

    For y² = P̂(x) of genus g ≥ 2, H = ∏ (x − a_i) over the first g − 1
    sorted branch roots; otherwise H is constant.

    Raises
    ------
    core.exceptions.UnsupportedShapeError
        For non-hyperelliptic curves of genus ≥ 2.
    core.exceptions.NumericalError
        If a divisor point fails the tangency check.
    """
    from curvint.surface import _branch_values, hyperelliptic_rhs
    g = genus(P)
    one = BivarPoly({(0, 0): 1}, exact=P.exact)
    if g <= 1:
        return CanonicalDivisorData(one)
    hyperelliptic_rhs(P)
    branch, _ = _branch_values(P)
    H = one
    for a in branch[:g - 1]:
        H = H * BivarPoly({(1, 0): 1, (0, 0): -a}, exact=False)
    Pn = P.numeric()
    points = [(complex(a), 0j) for a in branch[:g - 1]]
    worst = 0.0
    for x, y in points:
        cross = H.partial('x')(x, y) * Pn.partial('y')(x, y) \
            - H.partial('y')(x, y) * Pn.partial('x')(x, y)
        worst = max(worst, abs(Pn(x, y)), abs(H(x, y)), abs(cross))
    if worst > math.sqrt(config.root_tol) * max(1.0, Pn.scale()):
        raise NumericalError(f"canonical divisor fails the tangency check ({worst:.3g})")
    logger.info("canonical divisor from branch roots %s", list(range(g - 1)))
    return CanonicalDivisorData(H, points, list(range(g - 1)), worst)


########################################
#       PRIME FORM AND BERGMAN         #
########################################
def _spinor_square(periods, ctx, chi, x, y):
    """dx-coefficient of Σ_i ∂_iΘ_χ(0)·ω_i at (x, y)."""
    grad, _ = theta_derivs(ctx, chi)
    return periods.omega(x, y) @ grad


def prime_form(P, periods, ctx, p, q, chi=None):
    """
    E(p, q) = Θ_χ(F(p) − F(q)) / √(ν(p)·ν(q)) with ν = Σ ∂_iΘ_χ(0) ω_i
    as a dx-coefficient.

    The square root takes its principal branch, so single values are
    defined up to sign; ratios along a continuous path are not.

    Raises
    ------
    core.exceptions.EvaluationError
        If ν vanishes at p or q.
    """
    from curvint.periods import abel_map
    chi = chi or regular_odd_characteristic(ctx)
    nu = [_spinor_square(periods, ctx, chi, pt.x, pt.y) for pt in (p, q)]
    if min(abs(v) for v in nu) <= ctx.tol:
        raise EvaluationError("ν vanishes at an argument of the prime form")
    u = abel_map(P, periods, p) - abel_map(P, periods, q)
    return theta(ctx, u, chi) / np.sqrt(nu[0] * nu[1])


def bergman_from_theta_check(P, periods, ctx, p, q, chi=None):
    """
    |B_Θ(p, q) − B(p, q)| for the dx⊗dx coefficients, where
    B_Θ = d_p d_q ln Θ_χ(F(p) − F(q)) and B = B^comb + S·Ω⊗Ω.

    Returns
    -------
    float
    """
    from curvint.periods import abel_map, monomial_values
    chi = chi or regular_odd_characteristic(ctx)
    u = abel_map(P, periods, p) - abel_map(P, periods, q)
    value, grad, hess = theta_jet(ctx, u, chi, 2)
    log_hess = hess / value - np.outer(grad, grad) / value ** 2
    wp = periods.omega(p.x, p.y)
    wq = periods.omega(q.x, q.y)
    b_theta = -wp @ log_hess @ wq
    Py = P.numeric().partial('y')
    mp = monomial_values(periods.monomials, p.x, p.y) / Py(p.x, p.y)
    mq = monomial_values(periods.monomials, q.x, q.y) / Py(q.x, q.y)
    b_alg = bergman_comb(P, p, q) + mp @ periods.S @ mq
    residual = abs(b_theta - b_alg)
    logger.debug("theta Bergman residual %.3g", residual)
    if not np.isfinite(residual):
        raise EvaluationError("theta Bergman check is not finite at these points")
    return float(residual)
