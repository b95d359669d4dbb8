import numpy as np
import pytest
import sympy

from curvint.algebra import BivarPoly
from curvint.core.exceptions import DegenerateInputError
from curvint.forms import (
    X1,
    X2,
    Y1,
    Y2,
    RationalOneForm,
    bergman_comb,
    bergman_comb_rational,
    bergman_diagonal,
    c_poly,
    ds_comb,
    ds_comb_rational,
    omega_comb,
    puncture_residue,
    q_comb,
    q_comb_pair,
    residue_circle,
    schwarzian
)
from curvint.polygon import build_newton, punctures
from curvint.series import LocalChart
from curvint.surface import fiber

from utils import assert_close


K = 0.5


def legendre_y(x):
    return np.sqrt((1 - x ** 2) * (1 - K ** 2 * x ** 2) + 0j)


@pytest.fixture
def two_points():
    x1, x2 = 0.3, 0.6 + 0.1j
    return (x1, legendre_y(x1)), (x2, -legendre_y(x2))


########################################
#          COMBINATORIAL FORMS         #
########################################
def test_omega_kinds(legendre):
    assert omega_comb(legendre, 0, 0).kind == 'first'
    assert omega_comb(legendre, 1, 0).kind == 'third'
    assert omega_comb(legendre, 2, 0).kind == 'second'
    assert omega_comb(legendre, 1, 0).label == 'Omega_10'


def test_omega_values(legendre):
    form = omega_comb(legendre, 1, 0)
    assert_close(form(0.5, 2.0), 0.5 / 4, 1e-15)
    total = omega_comb(legendre, 0, 0) + form
    assert total.num == BivarPoly.parse('1 + x')
    assert_close(total(0.5, 2.0), 1.5 / 4, 1e-15)
    assert_close((3 * form)(0.5, 2.0), 3 * 0.5 / 4, 1e-15)
    assert_close((-form)(0.5, 2.0), -0.5 / 4, 1e-15)


def test_forms_with_different_denominators_combine():
    a = RationalOneForm.parse('1', 'x')
    b = RationalOneForm.parse('1', 'y')
    assert_close((a - b)(2.0, 4.0), 0.5 - 0.25, 1e-15)


def test_zero_denominator_is_rejected():
    with pytest.raises(DegenerateInputError, match='denominator is zero'):
        RationalOneForm(BivarPoly.parse('x'), BivarPoly())


def test_form_json():
    form = RationalOneForm.parse('x**2', '2*y')
    assert form.to_json() == {'num': 'x**2', 'den': '2*y'}


########################################
#               RESIDUES               #
########################################
def test_legendre_puncture_residues(legendre):
    residues = []
    for punct in punctures(legendre):
        value = puncture_residue(legendre, 1, 0, punct)
        assert_close(value, -1 / (2 * punct.eta), 1e-12)
        residues.append(value)
        assert puncture_residue(legendre, 0, 0, punct) == 0
        assert abs(puncture_residue(legendre, 2, 0, punct)) < 1e-10
    # residue theorem
    assert abs(sum(residues)) < 1e-12


def test_residue_by_quadrature_matches_closed_form(legendre):
    form = omega_comb(legendre, 1, 0)
    for punct in punctures(legendre):
        chart = LocalChart.at_puncture(legendre, punct)
        assert_close(residue_circle(form, chart), -1 / (2 * punct.eta), 1e-10)
        assert_close(form.residue(chart), -1 / (2 * punct.eta), 1e-12)


def test_weierstrass_holomorphic_form_has_no_residue(weierstrass):
    punct, = punctures(weierstrass)
    chart = LocalChart.at_puncture(weierstrass, punct)
    assert omega_comb(weierstrass, 0, 0).times(chart) == {}


########################################
#              Q^comb                  #
########################################
@pytest.mark.exact
def test_legendre_q_comb(legendre):
    Q = q_comb(legendre)
    assert Q.is_symmetric()
    assert sympy.expand(Q.to_expr() + sympy.Rational(1, 4) * (X1 + X2) ** 2) == 0


@pytest.mark.exact
def test_cubic_q_comb(cubic):
    Q = q_comb(cubic)
    assert Q.is_symmetric()
    expected = 2 * Y1 * X2 + 2 * X1 * Y2 + X1 * Y1 + X2 * Y2
    assert sympy.expand(Q.to_expr() - expected) == 0
    assert_close(Q(1.0, 2.0, 3.0, 4.0), 2 * 2 * 3 + 2 * 1 * 4 + 1 * 2 + 3 * 4, 1e-15)


def test_q_comb_pair_of_wide_polygon():
    P = BivarPoly.parse('1 + x**6 + x**5 + x**4*y**2 + x*y**3 + y**3')
    newton = build_newton(P)
    assert q_comb_pair(newton, (5, 0), (1, 3)) == [(1, (3, 1, 1, 0))]
    # the pair must go down-right to up-left
    assert q_comb_pair(newton, (1, 3), (5, 0)) == []


# hull (0,0), (5,0), (4,2), (2,4), (0,5) with (3,3) on the boundary and
# (1,3), (2,1) inside
FIGURE = BivarPoly.parse('1 + 2*x**2*y + x*y**3 + y**5 + x**2*y**4 + 3*x**3*y**3 '
                         '+ x**4*y**2 + x**5')


def test_q_comb_triangles_of_figure_polygon():
    newton = build_newton(FIGURE)
    assert q_comb_pair(newton, (5, 0), (1, 3)) == [(1, (3, 1, 1, 0))]
    # (3,3) and (4,2) carry weight 2, (4,3) weight 1
    assert sorted(q_comb_pair(newton, (5, 0), (2, 4))) == [
        (1, (3, 2, 2, 0)),
        (2, (2, 2, 3, 0)),
        (2, (3, 1, 2, 1))
    ]


@pytest.mark.exact
def test_q_comb_of_figure_polygon():
    Q = q_comb(FIGURE)
    assert Q.is_symmetric()
    # each of these monomials comes from one triangle only, and
    # P_13 = P_24 = P_50 = 1
    assert Q.terms[(3, 1, 1, 0)] == 1
    assert Q.terms[(1, 0, 3, 1)] == 1
    assert Q.terms[(3, 2, 2, 0)] == 1
    assert Q.terms[(2, 2, 3, 0)] == 2
    assert Q.terms[(3, 1, 2, 1)] == 2
    assert Q.terms[(2, 1, 3, 1)] == 2


def test_q_comb_at_first_point(cubic):
    Q = q_comb(cubic)
    poly = Q.at_first(1.0, 2.0)
    assert_close(poly(3.0, 4.0), Q(1.0, 2.0, 3.0, 4.0), 1e-15)


########################################
#              B^comb                  #
########################################
def test_legendre_bergman_closed_form(legendre, two_points):
    (x1, y1), (x2, y2) = two_points
    k2 = K ** 2
    expected = (2 * y1 * y2 + 2 - (1 + k2) * (x1 ** 2 + x2 ** 2)
                + 2 * k2 * x1 ** 2 * x2 ** 2) / (4 * y1 * y2 * (x1 - x2) ** 2)
    value = bergman_comb(legendre, (x1, y1), (x2, y2))
    assert_close(value, expected, 1e-12)
    assert_close(bergman_comb(legendre, (x2, y2), (x1, y1)), value, 1e-12)


def test_bergman_rational_matches_direct(cubic):
    x1, x2 = 0.4 + 0.2j, -0.7 + 0.5j
    y1 = np.roots([1, 0, x1, 1 + x1 ** 3])[0]
    y2 = np.roots([1, 0, x2, 1 + x2 ** 3])[1]
    num, den = bergman_comb_rational(cubic, (x1, y1))
    assert_close(num(x2, y2) / den(x2, y2), bergman_comb(cubic, (x1, y1), (x2, y2)),
                 1e-10)
    assert_close(bergman_comb(cubic, (x2, y2), (x1, y1)),
                 bergman_comb(cubic, (x1, y1), (x2, y2)), 1e-10)


def test_bergman_has_unit_double_pole(legendre):
    x = 0.3
    y = legendre_y(x)
    chart = LocalChart.at_point(legendre, x, y)
    num, den = bergman_comb_rational(legendre, (x, y))
    series = chart.laurent(num, den, 3)
    assert series.valuation == -2
    assert_close(series.coefficient(-2), 1, 1e-10)
    assert abs(series.coefficient(-1)) < 1e-10


@pytest.mark.parametrize('fixture', ['legendre', 'weierstrass', 'cubic', None])
def test_bergman_has_no_pole_at_punctures(request, fixture):
    P = FIGURE if fixture is None else request.getfixturevalue(fixture)
    x1 = 0.3 + 0.2j
    num, den = bergman_comb_rational(P, (x1, fiber(P, x1)[0]))
    for punct in punctures(P):
        chart = LocalChart.at_puncture(P, punct)
        assert chart.form_series(num, den, 4).valuation >= 0, punct.label


@pytest.mark.parametrize('fixture', ['legendre', 'weierstrass', 'cubic'])
def test_bergman_poles_only_on_the_diagonal(request, fixture):
    P = request.getfixturevalue(fixture)
    x1 = 0.3 + 0.2j
    y1, *others = fiber(P, x1)
    num, den = bergman_comb_rational(P, (x1, y1))
    series = LocalChart.at_point(P, x1, y1).laurent(num, den, 3)
    assert series.valuation == -2
    assert_close(series.coefficient(-2), 1, 1e-8)
    assert abs(series.coefficient(-1)) < 1e-8
    for y in others:
        assert LocalChart.at_point(P, x1, y).laurent(num, den, 3).valuation >= 0


def test_legendre_bergman_diagonal(legendre):
    x = 0.3
    y = legendre_y(x)
    expected = (1 - K ** 2) ** 2 * x ** 2 / (4 * y ** 4)
    assert_close(bergman_diagonal(legendre, (x, y)), expected, 1e-10)


########################################
#              dS^comb                 #
########################################
def test_legendre_ds_closed_form(legendre, two_points):
    (x1, y1), (x2, y2) = two_points
    x = -0.2 + 0.3j
    y = legendre_y(x)
    expected = ((y + y1) / (x - x1) - (y + y2) / (x - x2)) / (2 * y)
    value = ds_comb(legendre, (x1, y1), (x2, y2), (x, y))
    assert_close(value, expected, 1e-12)
    num, den = ds_comb_rational(legendre, (x1, y1), (x2, y2))
    assert_close(num(x, y) / den(x, y), value, 1e-10)


def test_ds_residues(legendre, two_points):
    p1, p2 = two_points
    num, den = ds_comb_rational(legendre, p1, p2)
    t1 = LocalChart.at_point(legendre, *p1).times(num, den)
    t2 = LocalChart.at_point(legendre, *p2).times(num, den)
    assert list(t1) == [0] and list(t2) == [0]
    assert_close(t1[0], 1, 1e-9)
    assert_close(t2[0], -1, 1e-9)


def test_ds_is_regular_on_the_other_sheet(legendre, two_points):
    (x1, y1), p2 = two_points
    num, den = ds_comb_rational(legendre, (x1, y1), p2)
    assert LocalChart.at_point(legendre, x1, -y1).times(num, den) == {}


########################################
#             C POLYNOMIALS            #
########################################
@pytest.mark.exact
def test_legendre_c_polynomial(legendre):
    C = c_poly(legendre)
    # 2k²x1² − (1 + k²)
    assert C[(0, 0)] == BivarPoly.parse('x**2/2 - 5/4')
    assert_close(C.eval(np.array([0.0, 1.0]), np.array([1.0, 0.0]))[:, 0],
                 [-1.25, -0.75], 1e-15)


@pytest.mark.exact
def test_cubic_c_polynomial(cubic):
    assert c_poly(cubic)[(0, 0)] == BivarPoly({(1, 1): -3})


@pytest.mark.exact
def test_genus_two_c_polynomials(genus2):
    C = c_poly(genus2)
    assert set(C.polys) == {(0, 0), (1, 0)}


########################################
#              SCHWARZIAN              #
########################################
def _samples(f, z, h):
    return [f(z + k * h) for k in (-2, -1, 0, 1, 2)]


@pytest.mark.parametrize('f, z, expected', [
    (lambda z: z, 0.5, 0),
    (lambda z: 1 / z, 2.0, 0),
    (lambda z: (2 * z + 1) / (z + 3), 1.0, 0),
    (np.exp, 0.0, -0.5)
])
def test_schwarzian(f, z, expected):
    h = 1e-3
    assert abs(schwarzian(_samples(f, z, h), h) - expected) < 1e-4
