# pylint: skip-file
from __future__ import annotations

from collections.abc import Iterator
from os import getenv
from typing import TYPE_CHECKING, Any

import pytest

import curvint
from curvint.algebra import BivarPoly
from curvint.decompose import legendre_curve
from curvint.periods import PeriodData, compute_periods

if TYPE_CHECKING:
    import _pytest


SKIP_SLOW = getenv('CURVINT_SKIP_SLOW', '0').lower() in ('1', 'true', 'yes')

# field values restored after every test
_CONFIG_DEFAULTS: dict[str, Any] = {
    'precision': 15,
    'root_tol': 1e-10,
    'rank_tol': 1e-8,
    'quad_tol': 1e-12,
    'quad_max_depth': 30,
    'track_min_step': 1e-9,
    'separation_ratio': 3.0,
    'clearance_fraction': 0.125,
    'theta_max_radius': 40,
    'max_pole_order': 64,
    'seed': 0,
    'cache_dir': None,
    'check': False
}


def pytest_runtest_setup(item: pytest.Item) -> None:
    if SKIP_SLOW and any(m.name == 'slow' for m in item.iter_markers()):
        pytest.skip("slow tests disabled by CURVINT_SKIP_SLOW")


@pytest.fixture(autouse=True)
def reset_config() -> Iterator[None]:
    yield
    curvint.configure(**_CONFIG_DEFAULTS)


########################################
#                CURVES                #
########################################
@pytest.fixture(scope='session')
def legendre() -> BivarPoly:
    """y² − (1 − x²)(1 − x²/4): branch values ±1, ±2."""
    return legendre_curve('1/2')


@pytest.fixture(scope='session')
def legendre_34() -> BivarPoly:
    return legendre_curve('3/4')


@pytest.fixture(scope='session')
def weierstrass() -> BivarPoly:
    """y² − x³ + x: branch values −1, 0, 1."""
    return BivarPoly.parse('y**2 - x**3 + x')


@pytest.fixture(scope='session')
def nodal_weierstrass() -> BivarPoly:
    """y² − (x − 1)²(x + 2): a node at (1, 0), genus 0."""
    return BivarPoly.parse('y**2 - x**3 + 3*x - 2')


@pytest.fixture(scope='session')
def cubic() -> BivarPoly:
    """1 + x³ + y³ + t·xy at t = 1."""
    return BivarPoly.parse('1 + x**3 + y**3 + t*x*y', params={'t': 1})


@pytest.fixture(scope='session')
def nodal_elliptic() -> BivarPoly:
    """y² − (x − 3)²(x² − 1)(x² − 4): #N° = 2, genus 1."""
    return BivarPoly.parse('y**2 - (x - 3)**2*(x**2 - 1)*(x**2 - 4)')


@pytest.fixture(scope='session')
def genus2() -> BivarPoly:
    return BivarPoly.parse('y**2 - (x**2 - 1)*(x**2 - 4)*(x**2 - 9)')


########################################
#               PERIODS                #
########################################
@pytest.fixture(scope='session')
def legendre_periods(legendre: BivarPoly) -> PeriodData:
    return compute_periods(legendre)


@pytest.fixture(scope='session')
def legendre_34_periods(legendre_34: BivarPoly) -> PeriodData:
    return compute_periods(legendre_34)


@pytest.fixture(scope='session')
def weierstrass_periods(weierstrass: BivarPoly) -> PeriodData:
    return compute_periods(weierstrass)


@pytest.fixture(scope='session')
def nodal_elliptic_periods(nodal_elliptic: BivarPoly) -> PeriodData:
    return compute_periods(nodal_elliptic)


@pytest.fixture(scope='session')
def genus2_periods(genus2: BivarPoly) -> PeriodData:
    return compute_periods(genus2)


def pytest_report_header(config: _pytest.config.Config) -> str:
    return f"curvint {curvint.__version__}, slow tests {'off' if SKIP_SLOW else 'on'}"
