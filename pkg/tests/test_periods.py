import numpy as np
import pytest
from scipy import special

from curvint.algebra import BivarPoly
from curvint.core.exceptions import (
    CurveInputError,
    CycleSetError,
    FundamentalDomainError,
    UnsupportedShapeError
)
from curvint.forms import bergman_comb, ds_comb
from curvint.periods import (
    PeriodData,
    abel_map,
    change_cycles,
    compute_K,
    compute_periods,
    crossed_loop,
    curve_fingerprint,
    cycle_integral,
    domain_path,
    fit_forms,
    integrate_path,
    legendre_s_from_g2,
    monomial_values,
    rauch_check,
    zeta,
    zeta_path
)
from curvint.surface import (
    CycleSet,
    PathSpec,
    SurfacePoint,
    default_cycles_hyperelliptic,
    fiber,
    track
)
from curvint.theta import g2_from_q

from utils import (
    agm_E,
    agm_K,
    assert_close,
    complementary_K,
    legendre_S,
    legendre_tau
)


def point_near(P, x, y_hint):
    roots = fiber(P, x)
    return SurfacePoint.on(P, x, min(roots, key=lambda r: abs(r - y_hint)))


########################################
#              QUADRATURE              #
########################################
def test_integrate_constant_along_a_path(legendre):
    path = PathSpec((0, 0.5 + 0.5j))
    result = integrate_path(legendre, lambda x, y: np.ones_like(x), path)
    assert_close(result.value, 0.5 + 0.5j, 1e-13)
    assert result.end.residual < 1e-12


def test_integrate_vector_valued(legendre):
    path = PathSpec((0, 0.5j, 0.5 + 0.5j))

    def integrand(x, y):
        return np.stack([np.ones_like(x), x], axis=-1)

    value = integrate_path(legendre, integrand, path).value
    assert_close(value, [0.5 + 0.5j, (0.5 + 0.5j) ** 2 / 2], 1e-13)


def test_monomial_values():
    values = monomial_values(((0, 0), (1, 0), (1, 2)), np.array([2.0]), np.array([3.0]))
    assert_close(values, [[1, 2, 18]], 1e-15)
    assert monomial_values((), np.zeros(3), np.zeros(3)).shape == (3, 0)


def test_fit_forms_recovers_coefficients(genus2):
    monomials = ((0, 0), (1, 0))
    points = [point_near(genus2, x, 0) for x in (0.2 + 0.1j, -0.5j, 1.5 + 1j, 2.5j)]
    Py = genus2.numeric().partial('y')
    values = np.array([(2 - 1j + 3 * p.x) / Py(p.x, p.y) for p in points])
    coeffs, residual = fit_forms(genus2, monomials, points, values)
    assert_close(coeffs, [2 - 1j, 3], 1e-10)
    assert residual < 1e-12


########################################
#           LEGENDRE PERIODS           #
########################################
@pytest.mark.slow
@pytest.mark.parametrize('fixture, k', [
    ('legendre_periods', 0.5),
    ('legendre_34_periods', 0.75)
])
def test_legendre_periods(request, fixture, k):
    periods = request.getfixturevalue(fixture)
    assert periods.genus == 1
    assert periods.monomials == ((0, 0),)
    # 𝒦 = 2K(k)
    assert_close(periods.K[0, 0], 2 * agm_K(k), 1e-9)
    assert_close(periods.Khat @ periods.K, [[1]], 1e-12)
    assert_close(periods.tau[0, 0], legendre_tau(k), 1e-9)
    assert_close(periods.S[0, 0], legendre_S(k), 1e-7)
    assert periods.metadata['degenerate'] is False
    assert periods.metadata['seed'] == 0
    assert periods.metadata['S_asymmetry'] == 0


@pytest.mark.slow
def test_s_agrees_with_eisenstein_series(legendre_periods):
    k = 0.5
    tau = legendre_periods.tau[0, 0]
    Kcal = legendre_periods.K[0, 0]
    expected = legendre_s_from_g2(g2_from_q(np.exp(1j * np.pi * tau)), Kcal, k)
    assert_close(legendre_periods.S[0, 0], expected, 1e-7)


def test_legendre_s_from_g2_on_closed_forms():
    k = 0.5
    K, E = agm_K(k), agm_E(k)
    # G₂/𝒦² with 𝒦 = 2K
    G2 = (2 * E / K - 5 / 3 + k * k / 3) * (2 * K) ** 2
    assert_close(legendre_s_from_g2(G2, 2 * K, k), legendre_S(k), 1e-14)


@pytest.mark.slow
def test_weierstrass_periods_are_lemniscatic(weierstrass_periods):
    # ∫_0^1 dx/√(x − x³) = B(1/4, 1/2)/2
    expected = special.beta(0.25, 0.5) / 2
    assert_close(abs(weierstrass_periods.K[0, 0]), expected, 1e-9)
    assert_close(weierstrass_periods.tau[0, 0], 1j, 1e-9)


@pytest.mark.slow
def test_genus_two_periods(genus2_periods):
    tau = genus2_periods.tau
    assert tau.shape == (2, 2)
    assert_close(tau, tau.T, 1e-12)
    assert np.all(np.linalg.eigvalsh(tau.imag) > 0)
    assert_close(genus2_periods.Khat @ genus2_periods.K, np.eye(2), 1e-10)
    S = genus2_periods.S
    assert_close(S, S.T, 1e-12)


########################################
#           NODAL CURVES               #
########################################
@pytest.mark.slow
def test_nodal_elliptic_periods(nodal_elliptic_periods):
    periods = nodal_elliptic_periods
    assert periods.metadata['degenerate'] is True
    assert periods.K.shape == (2, 1)
    assert periods.Khat.shape == (1, 2)
    # ω vanishes at the node x = 3
    assert_close(periods.Khat[0, 0] / periods.Khat[0, 1], -3, 1e-8)
    assert_close(periods.Khat @ periods.K, [[1]], 1e-10)
    extended = periods.extended
    assert extended.residues.shape == (2, 1)
    assert_close(abs(extended.residues[0, 0]), 2 * np.pi / (2 * np.sqrt(40)), 1e-9)
    assert_close(extended.residues[1, 0], 3 * extended.residues[0, 0], 1e-9)
    inv = np.linalg.inv(periods.ktilde())
    assert abs(inv[1] @ periods.K[:, 0]) < 1e-10
    assert_close(inv[1] @ extended.residues[:, 0], 1, 1e-10)


@pytest.mark.slow
def test_genus_zero_nodal_curve(nodal_weierstrass):
    periods = compute_periods(nodal_weierstrass)
    assert periods.genus == 0
    assert periods.K.shape == (1, 0)
    assert periods.tau.shape == (0, 0)
    assert periods.extended.residues.shape == (1, 1)
    assert periods.metadata['degenerate'] is True


def test_compute_K_needs_generic_curve(nodal_elliptic):
    with pytest.raises(UnsupportedShapeError, match='degenerate'):
        compute_K(nodal_elliptic, default_cycles_hyperelliptic(nodal_elliptic))


def test_cycle_count_must_match_genus(legendre):
    with pytest.raises(CycleSetError, match='genus is 1'):
        compute_periods(legendre, cycles=CycleSet([], []))


########################################
#           BASIS CHANGES              #
########################################
@pytest.mark.slow
def test_s_transformation(legendre_periods):
    periods = legendre_periods
    new = change_cycles(periods, [[0, 1], [-1, 0]])
    tau = periods.tau[0, 0]
    assert_close(new.K[0, 0], tau * periods.K[0, 0], 1e-10)
    # τ𝒦 = iK′
    assert_close(new.K[0, 0], 1j * complementary_K(0.5), 1e-8)
    assert_close(new.tau[0, 0], -1 / tau, 1e-10)
    assert_close(new.Khat @ new.K, [[1]], 1e-12)
    assert new.metadata['basis_change_check'] < 1e-12
    assert new.basis.tolist() == [[0, 1], [-1, 0]]
    assert new.zeta_cache == {}
    assert periods.basis.tolist() == [[1, 0], [0, 1]]


@pytest.mark.slow
def test_identity_change_keeps_everything(legendre_periods):
    same = change_cycles(legendre_periods, np.eye(2, dtype=int))
    assert_close(same.tau, legendre_periods.tau, 1e-14)
    assert_close(same.S, legendre_periods.S, 1e-14)


@pytest.mark.slow
def test_t_transformation_shifts_s_by_nothing(legendre_periods):
    # T: (A, B) → (A, A + B) has β = 0
    new = change_cycles(legendre_periods, [[1, 0], [1, 1]])
    assert_close(new.tau, legendre_periods.tau + 1, 1e-12)
    assert_close(new.S, legendre_periods.S, 1e-14)


@pytest.mark.slow
@pytest.mark.parametrize('U, message', [
    ([[1, 0.5], [0, 1]], 'integer'),
    ([[2, 0], [0, 1]], 'symplectic'),
    ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], 'integer')
])
def test_bad_basis_changes(legendre_periods, U, message):
    with pytest.raises(CycleSetError, match=message):
        change_cycles(legendre_periods, U)


@pytest.mark.slow
def test_loop_terms(legendre_periods):
    terms = legendre_periods.loop_terms('B1')
    assert len(terms) == 1 and terms[0][0] == 1
    for name in ('A2', 'C1', 'B'):
        with pytest.raises(CycleSetError):
            legendre_periods.loop_terms(name)


########################################
#            SERIALIZATION             #
########################################
@pytest.mark.slow
def test_period_data_json(legendre, legendre_periods):
    doc = legendre_periods.to_json()
    assert doc['schema_version'] == '1.0'
    again = PeriodData.from_json(legendre, doc)
    assert_close(again.K, legendre_periods.K, 1e-15)
    assert_close(again.tau, legendre_periods.tau, 1e-15)
    assert_close(again.S, legendre_periods.S, 1e-15)
    assert_close(again.origin.x, legendre_periods.origin.x, 1e-15)
    assert again.monomials == ((0, 0),)
    assert again.extended is None
    doc['schema_version'] = '2.0'
    with pytest.raises(CurveInputError, match='incompatible'):
        PeriodData.from_json(legendre, doc)


def test_curve_fingerprint(legendre, legendre_34):
    assert curve_fingerprint(legendre) == curve_fingerprint(legendre)
    assert curve_fingerprint(legendre) != curve_fingerprint(legendre_34)


########################################
#             ζ AND ABEL MAP           #
########################################
@pytest.fixture(scope='module')
def sample_point(legendre):
    return point_near(legendre, 0.3 + 0.4j, 1)


@pytest.mark.slow
def test_zeta_at_origin_is_zero(legendre, legendre_periods):
    value = zeta(legendre, legendre_periods, legendre_periods.origin)
    assert np.all(value == 0)
    assert np.all(abel_map(legendre, legendre_periods, legendre_periods.origin) == 0)


@pytest.mark.slow
def test_zeta_kills_a_periods(legendre, legendre_periods, sample_point):
    periods = legendre_periods
    z = zeta(legendre, periods, sample_point)
    o = periods.origin
    Py = legendre.numeric().partial('y')

    def normalized(x, y):
        mono = monomial_values(periods.monomials, x, y) @ z
        return ds_comb(legendre, sample_point, o, (x, y)) + mono / Py(x, y)

    assert abs(cycle_integral(periods, normalized, 'A1')) < 1e-8
    assert zeta(legendre, periods, sample_point) is z


@pytest.mark.slow
@pytest.mark.parametrize('x, y_hint', [(0.3 + 0.4j, 1), (1.7 - 0.6j, 1j)])
def test_bergman_has_no_a_periods(legendre, legendre_periods, x, y_hint):
    # fresh points, not among those the S-solve used
    periods = legendre_periods
    p = point_near(legendre, x, y_hint)
    Py = legendre.numeric().partial('y')
    at_p = monomial_values(periods.monomials, p.x, p.y) / Py(p.x, p.y)

    def kernel(x, y):
        omega = monomial_values(periods.monomials, x, y) / np.asarray(Py(x, y))[..., None]
        return bergman_comb(legendre, p, (x, y)) + omega @ (periods.S @ at_p)

    assert abs(cycle_integral(periods, kernel, 'A1')) < 1e-7


@pytest.mark.slow
def test_zeta_by_integration_matches_normalization(legendre, legendre_periods,
                                                    sample_point):
    by_normalization = zeta(legendre, legendre_periods, sample_point)
    by_path = zeta_path(legendre, legendre_periods, sample_point)
    assert_close(by_path, by_normalization, 1e-6)


@pytest.mark.slow
def test_domain_path_and_abel_map(legendre, legendre_periods, sample_point):
    periods = legendre_periods
    path = domain_path(legendre, periods, sample_point)
    assert path.label == 'o->p'
    assert path.start_y == periods.origin.y
    F = abel_map(legendre, periods, sample_point)
    assert F.shape == (1,)
    direct = integrate_path(legendre, periods.omega, path).value
    assert_close(F, direct, 1e-12)


@pytest.mark.slow
def test_abel_map_rejects_wrong_sheet(legendre, legendre_periods, sample_point):
    o = legendre_periods.origin
    path = PathSpec((o.x, sample_point.x), start_y=o.y)
    end = track(legendre, path).point
    wrong = SurfacePoint.on(legendre, end.x, -end.y)
    with pytest.raises(FundamentalDomainError, match='supply a path'):
        abel_map(legendre, legendre_periods, wrong, path=path)


@pytest.mark.slow
def test_crossed_loop(legendre_periods):
    assert crossed_loop(legendre_periods, 0, 0.5j) == 'A1'
    assert crossed_loop(legendre_periods, 3j, 3 + 3j) is None


########################################
#                RAUCH                 #
########################################
@pytest.mark.slow
def test_rauch_variation_of_legendre(legendre, legendre_periods):
    k = 0.5
    K, E = agm_K(k), agm_E(k)
    # ∂P/∂k at k = 1/2
    deltaP = BivarPoly.parse('x**2 - x**4')
    expected = (E / (k * (1 - k * k)) - K / k) / K
    report = rauch_check(legendre, deltaP, legendre_periods)
    assert_close(report.residue, [[expected]], 1e-7)
    assert_close(report.finite_difference, [[expected]], 1e-6)
    assert report.difference < 1e-6


@pytest.mark.slow
def test_rauch_of_zero_variation(legendre, legendre_periods):
    report = rauch_check(legendre, BivarPoly(), legendre_periods)
    assert report.difference == 0
    assert np.all(report.residue == 0)


@pytest.mark.slow
def test_rauch_needs_generic_curve(nodal_elliptic, nodal_elliptic_periods):
    with pytest.raises(UnsupportedShapeError):
        rauch_check(nodal_elliptic, BivarPoly.parse('x'), nodal_elliptic_periods)
