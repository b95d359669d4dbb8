import numpy as np
import pytest

from curvint.algebra import BivarPoly
from curvint.core.exceptions import DegenerateInputError, EvaluationError
from curvint.polygon import punctures
from curvint.series import (
    LaurentSeries,
    LocalChart,
    charts_at,
    series_inverse,
    series_mul
)

from utils import assert_close


ONE = BivarPoly({(0, 0): 1})
X1 = BivarPoly({(1, 0): 1})
X2 = BivarPoly({(2, 0): 1})


########################################
#            POWER SERIES              #
########################################
def test_series_mul_truncates():
    np.testing.assert_allclose(series_mul([1, 1], [1, 1], 3), [1, 2, 1])
    np.testing.assert_allclose(series_mul([1, 1, 1], [1, 1, 1], 2), [1, 2])


def test_series_inverse_of_geometric():
    np.testing.assert_allclose(series_inverse([1, -1], 5), np.ones(5))
    inv = series_inverse([2, 1, 3], 6)
    np.testing.assert_allclose(series_mul([2, 1, 3], inv, 6), [1, 0, 0, 0, 0, 0],
                               atol=1e-14)


def test_series_inverse_needs_constant_term():
    with pytest.raises(EvaluationError, match='constant term'):
        series_inverse([0, 1], 3)


def test_series_inverse_rejects_non_finite():
    with pytest.raises(EvaluationError, match='non-finite'):
        series_inverse([1, np.nan, 2], 3)
    with pytest.raises(EvaluationError):
        series_inverse([1e-300, 1e300], 4)


def test_laurent_series_coefficients():
    series = LaurentSeries(-2, np.array([1, 2, 3], dtype=complex))
    assert series.coefficient(-3) == 0
    assert series.coefficient(-1) == 2
    assert series.order == 1
    with pytest.raises(IndexError):
        series.coefficient(1)


########################################
#             REGULAR CHARTS           #
########################################
def test_chart_at_regular_point(legendre):
    chart = LocalChart.at_point(legendre, 0, 1)
    assert (chart.a, chart.b, chart.m) == (1, 1, 1)
    assert chart.kind == 'regular'
    assert_close(chart.eta, 0, 1e-14)
    # y = √((1 − x²)(1 − x²/4)) = 1 − 5x²/8 + …
    w = chart.w_series(3)
    assert_close(w[1], -5 / 8, 1e-12)
    x, y = chart.point(0.1)
    assert_close(y, np.sqrt((1 - 0.01) * (1 - 0.0025)), 1e-12)
    assert abs(legendre(x, y)) < 1e-12


def test_chart_slope_is_implicit_derivative(weierstrass):
    x0 = 2.0
    y0 = np.sqrt(x0 ** 3 - x0)
    chart = LocalChart.at_point(weierstrass, x0, y0)
    assert_close(chart.eta, (3 * x0 ** 2 - 1) / (2 * y0), 1e-12)


def test_chart_rejects_non_roots(legendre):
    with pytest.raises(DegenerateInputError, match='not a root'):
        LocalChart(legendre, 0, 1, 1, 1, 1, eta=5)


def test_fft_coefficients_recover_x(legendre):
    chart = LocalChart.at_point(legendre, 0, 1)
    coeffs = chart.fft_coefficients(lambda xi, x, y: x ** 2 + 3)
    assert_close(coeffs[0], 3, 1e-12)
    assert_close(coeffs[2], 1, 1e-12)
    assert abs(coeffs[1]) < 1e-12
    assert abs(coeffs[-1]) < 1e-12


########################################
#          DEGENERATE POINTS           #
########################################
def test_branch_point_has_one_disc(legendre):
    charts = charts_at(legendre, (1, 0))
    assert len(charts) == 1
    chart = charts[0]
    assert chart.kind == 'branch'
    assert (chart.a, chart.b) == (2, 1)
    # y² ≈ −3(x − 1)/2 near x = 1
    assert_close(chart.eta ** 2, -1.5, 1e-10)
    x, y = chart.point(0.05j)
    assert abs(legendre(x, y)) < 1e-12


def test_at_point_returns_branch_chart(legendre):
    chart = LocalChart.at_point(legendre, 1, 0)
    assert chart.kind == 'branch'


def test_node_has_two_discs(nodal_weierstrass):
    charts = charts_at(nodal_weierstrass, (1, 0))
    assert len(charts) == 2
    assert all(c.kind == 'regular' for c in charts)
    # y ≈ ±√3 (x − 1)
    assert_close(sorted(c.eta.real for c in charts), [-np.sqrt(3), np.sqrt(3)],
                 1e-9)
    for chart in charts:
        x, y = chart.point(0.01)
        assert abs(nodal_weierstrass(x, y)) < 1e-12


def test_singular_point_needs_a_disc(nodal_weierstrass):
    with pytest.raises(DegenerateInputError, match='is singular'):
        LocalChart.at_point(nodal_weierstrass, 1, 0)


########################################
#          PUNCTURE CHARTS             #
########################################
def test_legendre_puncture_expansion(legendre):
    for punct in punctures(legendre):
        chart = LocalChart.at_puncture(legendre, punct)
        k = punct.eta
        w = chart.w_series(4)
        assert_close(w[:3], [k, 0, -(1 + k ** 2) / (2 * k)], 1e-12)
        assert abs(w[3]) < 1e-12


def test_weierstrass_puncture_expansion(weierstrass):
    punct, = punctures(weierstrass)
    chart = LocalChart.at_puncture(weierstrass, punct)
    eta = punct.eta
    # w² = 1 − ξ⁴
    assert_close(chart.w_series(5), [eta, 0, 0, 0, -eta / 2], 1e-12)


def test_laurent_of_x_at_infinity(legendre):
    chart = LocalChart.at_puncture(legendre, punctures(legendre)[0])
    series = chart.laurent(X1, ONE, n=3)
    assert series.valuation == -1
    assert_close(series.coeffs, [1, 0, 0], 1e-14)


def test_holomorphic_form_at_infinity(legendre):
    Py = legendre.partial('y')
    for punct in punctures(legendre):
        chart = LocalChart.at_puncture(legendre, punct)
        series = chart.form_series(ONE, Py, n=2)
        assert series.valuation == 0
        assert_close(series.coefficient(0), -1 / (2 * punct.eta), 1e-12)
        assert chart.times(ONE, Py) == {}
        assert chart.pole_degree(ONE, Py) == -1


def test_third_kind_residue(legendre):
    Py = legendre.partial('y')
    for punct in punctures(legendre):
        chart = LocalChart.at_puncture(legendre, punct)
        t = chart.times(X1, Py)
        assert list(t) == [0]
        assert_close(t[0], -1 / (2 * punct.eta), 1e-12)


def test_long_expansion_at_puncture(legendre):
    # puncture coefficients grow geometrically; the leading order must still
    # be found when many terms are requested
    Py = legendre.partial('y')
    for punct in punctures(legendre):
        chart = LocalChart.at_puncture(legendre, punct)
        series = chart.laurent(ONE, Py, n=32)
        assert series.valuation == 2
        assert_close(series.coefficient(2), 1 / (2 * punct.eta), 1e-12)
        assert np.all(np.isfinite(series.coeffs))
        series = chart.form_series(X1, Py, n=32)
        assert series.valuation == -1
        assert_close(series.coefficient(-1), -1 / (2 * punct.eta), 1e-12)


def test_second_kind_pole(legendre):
    Py = legendre.partial('y')
    chart = LocalChart.at_puncture(legendre, punctures(legendre)[0])
    t = chart.times(X2, Py)
    assert list(t) == [1]
    assert_close(t[1], -1 / (2 * chart.eta), 1e-12)
    assert chart.pole_degree(X2, Py) == 1
