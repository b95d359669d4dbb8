"""shared utilities for curvint tests"""

import json
import math
from pathlib import Path
# use typing generics for compatibility with Python 3.9
from typing import Any, Callable, List, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy import integrate, special


_E = TypeVar('_E', bound=BaseException)
_Number = Union[int, float, complex, np.number]
_Point = Tuple[complex, complex]


########################################
#           EXCEPTION CLASSES          #
########################################
class CurvintTestingError(Exception):
    """Base class for curvint testing-related errors"""


class CurvintAssertionError(CurvintTestingError, AssertionError):
    """Subclasses AssertionError for pytest-specific handling"""


class OracleError(CurvintTestingError):
    """Raised if a reference value can't be computed"""


########################################
#           HELPER FUNCTIONS           #
########################################
def rel_err(value: Any, reference: Any) -> float:
    """Largest relative difference, with a floor of 1 on the scale."""
    value = np.asarray(value, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(reference), initial=0.0)))
    return float(np.max(np.abs(value - reference), initial=0.0)) / scale


def assert_close(value: Any, reference: Any, tol: float, what: str = 'value') -> None:
    err = rel_err(value, reference)
    if not err < tol:
        raise CurvintAssertionError(
            f"{what}: {value!r} vs {reference!r} (relative error {err:.3g} "
            f"≥ {tol:g})"
        )


def raises_with(exc: _E, **attrs: Any) -> _E:
    """Check attributes of a caught exception and return it."""
    for name, expected in attrs.items():
        actual = getattr(exc, name)
        if actual != expected:
            raise CurvintAssertionError(
                f"{type(exc).__name__}.{name} is {actual!r}, expected {expected!r}"
            )
    return exc


def write_json(path: Path, doc: Any) -> Path:
    path.write_text(json.dumps(doc), encoding='utf-8')
    return path


########################################
#          ELLIPTIC ORACLES            #
########################################
def agm_K(k: float) -> float:
    """K(k) = π / (2·agm(1, √(1 − k²))), iterated in plain floats."""
    a, b = 1.0, math.sqrt(1 - k * k)
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = (a + b) / 2, math.sqrt(a * b)
    return math.pi / (2 * a)


def agm_E(k: float) -> float:
    """E(k) from the AGM sequence c_n, Σ 2^(n−1) c_n²."""
    a, b, c = 1.0, math.sqrt(1 - k * k), k
    total = 0.5 * c * c
    for n in range(1, 64):
        a, b, c = (a + b) / 2, math.sqrt(a * b), (a - b) / 2
        total += 2 ** (n - 1) * c * c
        if abs(c) <= 1e-17:
            break
    return agm_K(k) * (1 - total)


def scipy_K(k: float) -> float:
    """Second source for K, from scipy's parameter convention m = k²."""
    return float(special.ellipk(k * k))


def scipy_E(k: float) -> float:
    return float(special.ellipe(k * k))


def complementary_K(k: float) -> float:
    return agm_K(math.sqrt(1 - k * k))


def legendre_tau(k: float) -> complex:
    """τ = iK′/(2K) for the default Legendre loops."""
    return 1j * complementary_K(k) / (2 * agm_K(k))


def legendre_S(k: float) -> float:
    """S = k² − 1 + 2E/K."""
    return k * k - 1 + 2 * agm_E(k) / agm_K(k)


def eisenstein_g2(q: complex, terms: int = 200) -> complex:
    """G₂ = (π²/3)(1 − 24 Σ n q^(2n) / (1 − q^(2n)))."""
    total = sum(n * q ** (2 * n) / (1 - q ** (2 * n)) for n in range(1, terms))
    return math.pi ** 2 / 3 * (1 - 24 * total)


def jacobi_theta3_product(q: complex, terms: int = 200) -> complex:
    out = 1 + 0j
    for n in range(1, terms):
        out *= (1 - q ** (2 * n)) * (1 + q ** (2 * n - 1)) ** 2
    return out


def euler_cube_product(q: complex, terms: int = 200) -> complex:
    """∏ (1 − q^(2n))³."""
    out = 1 + 0j
    for n in range(1, terms):
        out *= (1 - q ** (2 * n)) ** 3
    return out


def legendre_pi(u: float, k: float) -> float:
    """
    Π(u, k) = ∫_0^{π/2} dθ / ((1 − u sin²θ)·√(1 − k² sin²θ)) by scipy
    quadrature.
    """
    def f(t: float) -> float:
        s2 = math.sin(t) ** 2
        return 1 / ((1 - u * s2) * math.sqrt(1 - k * k * s2))

    value, err = integrate.quad(f, 0, math.pi / 2, epsabs=1e-14, epsrel=1e-13)
    if err > 1e-10:
        raise OracleError(f"Π({u}, {k}) quadrature error estimate {err:.3g}")
    return float(value)


########################################
#            CURVE HELPERS             #
########################################
def on_sheet(roots: Sequence[complex], target: complex) -> complex:
    """The fiber point closest to `target`."""
    return min(roots, key=lambda r: abs(r - target))


def central_difference(f: Callable[[float], Any], x: float, h: float) -> Any:
    return (f(x + h) - f(x - h)) / (2 * h)


def sample_x(rng: np.random.Generator, count: int, radius: float,
             avoid: Sequence[complex] = (), clearance: float = 0.3) -> List[complex]:
    """Random complex x-values in a box, away from `avoid`."""
    out: List[complex] = []
    while len(out) < count:
        x = radius * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        if all(abs(x - a) > clearance for a in avoid):
            out.append(x)
    return out

