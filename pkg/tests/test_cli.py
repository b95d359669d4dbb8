import cmath
import json
from types import SimpleNamespace

import pytest

import curvint
from curvint.cli import main
from curvint.core.core import COMMANDS, _direct_complete, period_cache_key
from curvint.core.exceptions import CliArgumentError, CurveInputError
from curvint.core.parsers import (
    curvint_parser,
    load_arc,
    load_curve,
    load_job,
    parse_gamma
)
from curvint.decompose import decompose, integrate_complete
from curvint.forms import omega_comb
from curvint.surface import PathSpec, default_cycles_hyperelliptic

from utils import agm_K, assert_close, raises_with, write_json


LEGENDRE_SPEC = {
    'polynomial': 'y**2 - (1 - x**2)*(1 - k**2*x**2)',
    'params': {'k': '1/2'}
}
HOLOMORPHIC_FORM = {'num': '1', 'den': '2*y'}


@pytest.fixture
def curve_file(tmp_path):
    return write_json(tmp_path / 'curve.json', LEGENDRE_SPEC)


@pytest.fixture
def form_file(tmp_path):
    return write_json(tmp_path / 'form.json', HOLOMORPHIC_FORM)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


########################################
#              LOOP SYNTAX             #
########################################
@pytest.mark.parametrize('text, expected', [
    ('A1', {'A1': 1}),
    ('2*A1 - B2 + C[inf0]', {'A1': 2, 'B2': -1, 'C[inf0]': 1}),
    ('-3 B1', {'B1': -3}),
    ('A1 + 2A1 - 3*A1 + B1', {'B1': 1}),
    ('A12+C[p0]', {'A12': 1, 'C[p0]': 1})
])
def test_parse_gamma(text, expected):
    assert parse_gamma(text) == expected


@pytest.mark.parametrize('text, position', [
    ('A1 + x', 3),
    ('A0', 0),
    ('A1 B1', 3),
    ('', 0)
])
def test_parse_gamma_errors(text, position):
    with pytest.raises(CurveInputError, match='invalid loop combination') as exc_info:
        parse_gamma(text)
    raises_with(exc_info.value, position=position)


########################################
#             INPUT LOADERS            #
########################################
def test_load_curve_from_polynomial(curve_file):
    P = load_curve(curve_file)
    assert P.exact
    assert_close(P.numeric()(2.0, 3.0), 9 - (1 - 4) * (1 - 1), 1e-15)


def test_load_curve_from_monomials():
    P = load_curve({
        'monomials': [
            {'i': 0, 'j': 2, 'coeff': 1},
            {'i': 3, 'j': 0, 'coeff': '-1'},
            {'i': 1, 'j': 0, 'coeff': {'re': 'a', 'im': '0'}}
        ],
        'params': {'a': '1'}
    })
    assert_close(P.numeric()(2.0, 3.0), 9 - 8 + 2, 1e-15)
    Pf = load_curve({'monomials': [{'i': 0, 'j': 2, 'coeff': 1.5}], 'field': 'float'})
    assert not Pf.exact


@pytest.mark.parametrize('spec, position', [
    ({'polynomial': 'y**2', 'field': 'mod7'}, 'curve.field'),
    ({'params': {}}, 'curve'),
    ({'monomials': []}, 'curve.monomials'),
    ({'monomials': [{'i': 0, 'j': 2}]}, 'curve.monomials[0]'),
    ({'monomials': [{'i': -1, 'j': 2, 'coeff': 1}]}, 'curve.monomials[0]'),
    ({'monomials': [{'i': 'x', 'j': 2, 'coeff': 1}]}, 'curve.monomials[0]'),
    ({'monomials': [{'i': 0, 'j': 2, 'coeff': 'q'}]}, 'curve.monomials[0].coeff'),
    ({'monomials': [{'i': 0, 'j': 2, 'coeff': True}]}, 'curve.monomials[0].coeff')
])
def test_load_curve_errors(spec, position):
    with pytest.raises(CurveInputError) as exc_info:
        load_curve(spec)
    raises_with(exc_info.value, position=position)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(CurveInputError, match='cannot read curve'):
        load_curve(tmp_path / 'nowhere.json')
    bad = tmp_path / 'bad.json'
    bad.write_text('{"polynomial": ', encoding='utf-8')
    with pytest.raises(CurveInputError, match='not valid JSON'):
        load_curve(bad)


def test_load_arc():
    arc = PathSpec((0.3 + 0.4j, -0.5 + 0.8j), start_sheet=0)
    assert load_arc(arc.to_json()) == arc
    with pytest.raises(CurveInputError, match='must not be closed'):
        load_arc(PathSpec((0, 1, 1j), closed=True).to_json())
    with pytest.raises(CurveInputError, match='malformed arc'):
        load_arc({'start_sheet': 0})


def test_job_file(tmp_path, curve_file):
    arc = PathSpec((0.3 + 0.4j, -0.5 + 0.8j), start_sheet=1)
    job_file = write_json(tmp_path / 'job.json', {
        'curve': 'curve.json',
        'form': HOLOMORPHIC_FORM,
        'gamma': '2*A1 - B1',
        'precision': 20
    })
    job = load_job(job_file)
    assert job.gamma == {'A1': 2, 'B1': -1}
    assert job.precision == 20 and job.seed is None
    assert job.cycles is None and job.arc is None
    assert job.raw == LEGENDRE_SPEC
    assert_close(job.form(0.5, 2.0), 0.25, 1e-15)
    # explicit arguments win over the document
    assert load_job(job_file, gamma='B1').gamma == {'B1': 1}
    arc_job = write_json(tmp_path / 'arc_job.json', {
        'curve': LEGENDRE_SPEC,
        'form': HOLOMORPHIC_FORM,
        'gamma': {'arc': arc.to_json()}
    })
    job = load_job(arc_job)
    assert job.gamma is None and job.arc == arc


def test_job_needs_a_curve(tmp_path):
    with pytest.raises(CurveInputError, match='no curve given'):
        load_job(write_json(tmp_path / 'job.json', {'gamma': 'A1'}))
    with pytest.raises(CurveInputError, match='JSON object'):
        load_job(write_json(tmp_path / 'list.json', [1, 2]))


def test_form_params_come_from_the_curve():
    job = load_job(curve={'polynomial': 'y**2 - x**3 + x'},
                   form={'num': 'x', 'den': 'y'})
    assert_close(job.form(2.0, 4.0), 0.5, 1e-15)


########################################
#            ARGUMENT PARSER           #
########################################
def test_parser_verbosity(curve_file):
    args = curvint_parser.parse_args(['-vv', '-q', 'analyze', '--curve', str(curve_file)])
    assert args.verbosity == 1
    assert args.command == 'analyze'


@pytest.mark.parametrize('argv', [
    ['frobnicate'],
    ['analyze', '--gamma', 'A1'],
    ['periods', '--precision', 'many'],
    []
])
def test_parser_errors_raise(argv):
    with pytest.raises(CliArgumentError) as exc_info:
        curvint_parser.parse_args(argv)
    assert exc_info.value.exit_code == 2


########################################
#              EXIT CODES              #
########################################
def test_analyze(capsys, curve_file):
    code, out, _ = run(['analyze', '--curve', curve_file], capsys)
    assert code == 0
    report = json.loads(out)
    assert report['schema_version'] == '1.0'
    assert report['command'] == 'analyze'
    assert report['genus'] == 1
    assert [p['label'] for p in report['punctures']] == ['inf0', 'inf1']
    assert report['moduli_space']['monomials'] == [[0, 0]]


def test_analyze_nodal_curve(capsys, tmp_path):
    curve = write_json(tmp_path / 'nodal.json', {'polynomial': 'y**2 - x**3 + 3*x - 2'})
    output = tmp_path / 'report.json'
    code, out, _ = run(['analyze', '--curve', curve, '--output', output], capsys)
    assert code == 0 and out == ''
    report = json.loads(output.read_text(encoding='utf-8'))
    assert report['genus'] == 0
    node, = (d for d in report['degenerate_points'] if d['nodal'])
    assert_close(complex(*node['x']), 1, 1e-9)
    assert node['discs'] == 2


def test_same_input_gives_same_report(capsys, curve_file):
    _, first, _ = run(['analyze', '--curve', curve_file], capsys)
    _, second, _ = run(['analyze', '--curve', curve_file], capsys)
    assert first == second


@pytest.mark.parametrize('argv, message', [
    (['analyze'], 'no curve given'),
    (['analyze', '--curve', 'nowhere.json'], 'cannot read curve'),
    (['frobnicate'], 'invalid choice'),
    (['integrate', '--curve', '{curve}'], 'no form given')
])
def test_input_errors_exit_2(capsys, curve_file, argv, message):
    argv = [a.format(curve=curve_file) for a in argv]
    code, out, err = run(argv, capsys)
    assert code == 2
    assert out == ''
    assert err.startswith('curvint: error:') and message in err


def test_integrate_needs_exactly_one_target(capsys, curve_file, form_file):
    code, _, err = run(['integrate', '--curve', curve_file, '--form', form_file],
                       capsys)
    assert code == 2 and 'exactly one' in err


def test_failed_check_exits_4_after_writing(capsys, monkeypatch, tmp_path, curve_file):
    report = {
        'schema_version': '1.0',
        'command': 'analyze',
        'checks': [{'name': 'always_off', 'value': [1.0, 0.0],
                    'reference': [0.0, 0.0], 'relative_difference': 1.0,
                    'tolerance': 1e-9, 'passed': False}]
    }
    monkeypatch.setitem(COMMANDS, 'analyze', lambda job: report)
    output = tmp_path / 'report.json'
    code, _, err = run(['analyze', '--curve', curve_file, '--output', output], capsys)
    assert code == 4
    assert "cross-check 'always_off' failed" in err
    assert json.loads(output.read_text(encoding='utf-8')) == report


def test_command_line_overrides_config(capsys, monkeypatch, curve_file):
    seen = {}

    def fake(job):
        seen.update(precision=curvint.config.precision, seed=curvint.config.seed)
        return {'command': 'analyze'}

    monkeypatch.setitem(COMMANDS, 'analyze', fake)
    code, _, _ = run(['analyze', '--curve', curve_file, '--precision', 20,
                      '--seed', 7], capsys)
    assert code == 0
    assert seen == {'precision': 20, 'seed': 7}


def test_cache_key_tracks_precision_and_seed(legendre):
    cycles = default_cycles_hyperelliptic(legendre)
    key = period_cache_key(legendre, cycles)
    assert key == period_cache_key(legendre, cycles)
    curvint.configure(precision=20)
    assert period_cache_key(legendre, cycles) != key
    curvint.configure(precision=15, seed=1)
    assert period_cache_key(legendre, cycles) != key


@pytest.mark.slow
def test_complete_integral(capsys, tmp_path, curve_file, form_file):
    output = tmp_path / 'out.json'
    code, _, _ = run(['integrate', '--curve', curve_file, '--form', form_file,
                      '--gamma', 'A1', '--check', '--output', output], capsys)
    assert code == 0
    report = json.loads(output.read_text(encoding='utf-8'))
    assert report['gamma'] == {'A1': 1}
    assert_close(complex(*report['value']), 2 * agm_K(0.5), 1e-9)
    check, = report['checks']
    assert check['name'] == 'direct_quadrature' and check['passed']


@pytest.mark.slow
def test_direct_check_takes_residues_from_the_form(legendre, legendre_periods):
    form = omega_comb(legendre, 1, 0)
    d = decompose(legendre, legendre_periods, form)
    job = SimpleNamespace(form=form)
    for label in ('inf0', 'inf1'):
        eta = d.times.pole(label).chart.eta
        direct = _direct_complete(job, legendre_periods, d, {f'C[{label}]': 1})
        assert_close(direct, 2j * cmath.pi * (-1 / (2 * eta)), 1e-9)
        assert_close(direct, integrate_complete(legendre, legendre_periods, d,
                                                {f'C[{label}]': 1}), 1e-9)


@pytest.mark.slow
def test_loop_outside_basis_exits_3(capsys, curve_file, form_file):
    code, _, err = run(['integrate', '--curve', curve_file, '--form', form_file,
                        '--gamma', 'A2'], capsys)
    assert code == 3
    assert 'outside the marked basis' in err


@pytest.mark.slow
def test_periods_are_cached(capsys, tmp_path, curve_file):
    cache = tmp_path / 'cache'
    curvint.configure(cache_dir=str(cache))
    _, first, _ = run(['periods', '--curve', curve_file], capsys)
    entries = list(cache.glob('periods-*.json'))
    assert len(entries) == 1
    _, second, _ = run(['periods', '--curve', curve_file], capsys)
    assert first == second
    report = json.loads(first)
    assert report['quality']['a_period_residual'] < 1e-9
