"""
Command orchestration for the `curvint` command line.

Each `cmd_*` function takes a `JobSpec`, runs one stage of the pipeline
and returns a JSON-serializable report. Period data, the expensive
preparation every other command reuses, are cached on disk under
`curvint.config.cache_dir` when it is set, keyed by the curve, the
cycle set, the precision and the seed. Reports are written atomically.
"""


__all__ = [
    'cmd_analyze',
    'cmd_decompose',
    'cmd_integrate',
    'cmd_periods',
    'COMMANDS',
    'dumps',
    'load_or_compute_periods',
    'period_cache_key',
    'raise_failed_checks',
    'write_output'
]


import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from curvint import config
from curvint.algebra import (
    critical_values,
    degenerate_points,
    discriminant_scalar,
    discriminant_y
)
from curvint.core.exceptions import CrossCheckError, CurveInputError
from curvint.decompose import (
    decompose,
    integrate_complete,
    integrate_direct,
    integrate_incomplete
)
from curvint.forms import residue_circle
from curvint.periods import (
    _encode,
    compute_periods,
    curve_fingerprint,
    cycle_integral,
    cycles_fingerprint,
    PeriodData,
    sample_points
)
from curvint.polygon import branch_analysis, build_newton, genus, moduli_space, punctures
from curvint.surface import default_cycles_hyperelliptic, riemann_hurwitz_genus


logger = logging.getLogger(__name__)


########################################
#               OUTPUT                 #
########################################
def dumps(doc):
    """Serialize a report; identical reports give identical text."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + '\n'


def write_output(doc, path=None):
    """
    Write a report to `path` (stdout if `None`).

    The file is written to a temporary sibling and renamed over `path`,
    so readers never see a partial document.
    """
    text = dumps(doc)
    if path is None:
        print(text, end='')
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info("wrote %s", path)


def raise_failed_checks(report):
    """
    Raise `CrossCheckError` for the first failed check of a report.

    Called after the report is written, so a failing run still leaves
    its numbers behind.
    """
    for check in report.get('checks', ()):
        if not check['passed']:
            raise CrossCheckError(check['name'], check['value'],
                                  check['reference'], check['tolerance'])


def _header(command):
    return {'schema_version': config.schema_version, 'command': command}


def _check(name, value, reference, tol, report):
    """Record the outcome of a cross-check in `report`."""
    value, reference = complex(value), complex(reference)
    diff = abs(value - reference) / max(1.0, abs(reference))
    report.append({'name': name, 'value': _encode(value),
                   'reference': _encode(reference),
                   'relative_difference': diff, 'tolerance': tol,
                   'passed': bool(diff <= tol)})


########################################
#               ANALYZE                #
########################################
def cmd_analyze(job):
    """
    Report the combinatorial and algebraic data of a curve: the
    discriminants, the Newton polygon classes, punctures, degenerate
    points and the genus with the basis of ℳ(P).
    """
    P = job.curve
    delta = discriminant_y(P)
    scalar = discriminant_scalar(P)
    newton = build_newton(P)
    monomials, basis = moduli_space(P)
    g = genus(P)
    report = _header('analyze')
    report.update({
        'curve': str(P.to_expr()),
        'exact': P.exact,
        'discriminant': {
            'polynomial': str(delta.as_expr()),
            'degree': delta.degree(),
            'scalar': None if scalar.value is None else str(scalar.value),
            'generic': scalar.generic
        },
        'polygon': {
            'hull': [list(p) for p in newton.hull],
            'interior': [list(p) for p in newton.interior],
            'third': [list(p) for p in newton.third],
            'second': [list(p) for p in newton.second]
        },
        'punctures': [
            {'label': p.label, 'at_infinity': p.at_infinity,
             'x': None if p.at_infinity else _encode(p.X), 'y': _encode(p.Y),
             'a': p.a, 'b': p.b, 'eta': _encode(p.eta)}
            for p in punctures(P, newton)
        ],
        'critical_values': [_encode(c) for c in critical_values(P)],
        'degenerate_points': [],
        'genus': g,
        'moduli_space': {
            'monomials': [list(m) for m in monomials],
            'basis': _encode(basis)
        }
    })
    for beta in degenerate_points(P):
        info = branch_analysis(P, beta)
        report['degenerate_points'].append({
            'x': _encode(beta[0]), 'y': _encode(beta[1]),
            'discs': info.ell, 'genus_drop': info.genus_beta,
            'deg': info.deg_beta, 'nodal': info.is_nodal
        })
    if config.check:
        report['checks'] = []
        _check('riemann_hurwitz_genus', riemann_hurwitz_genus(P), g, 0.0,
               report['checks'])
    logger.info("analyzed curve: genus %d, %d punctures", g, len(report['punctures']))
    return report


########################################
#               PERIODS                #
########################################
def period_cache_key(P, cycles):
    """sha256 over the curve, cycle set, precision and seed fingerprints."""
    text = '|'.join((curve_fingerprint(P), cycles_fingerprint(cycles),
                     str(config.precision), str(config.seed)))
    return hashlib.sha256(text.encode()).hexdigest()


def load_or_compute_periods(job):
    """
    Period data for the job's curve and loops, from the cache when a
    compatible entry exists.
    """
    P = job.curve
    cycles = job.cycles if job.cycles is not None else default_cycles_hyperelliptic(P)
    cache = None
    if config.cache_dir is not None:
        cache = Path(config.cache_dir) / f"periods-{period_cache_key(P, cycles)}.json"
        if cache.is_file():
            try:
                data = json.loads(cache.read_text(encoding='utf-8'))
                periods = PeriodData.from_json(P, data)
            except (OSError, ValueError, KeyError, CurveInputError) as e:
                logger.info("ignoring period cache %s: %s", cache, e)
            else:
                logger.info("loaded periods from %s", cache)
                return periods
    periods = compute_periods(P, cycles)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        write_output(periods.to_json(), cache)
    return periods


def _quality(periods):
    g = periods.genus
    if not g:
        return {}
    raw_tau = periods.Khat @ periods.KB
    out = {
        'tau_asymmetry': float(np.max(np.abs(raw_tau - raw_tau.T))),
        'im_tau_min_eigenvalue': float(np.min(np.linalg.eigvalsh(periods.tau.imag))),
        'a_period_residual': float(np.max(np.abs(periods.Khat @ periods.K - np.eye(g))))
    }
    if periods.S is not None and periods.S.size:
        out['S_asymmetry'] = float(np.max(np.abs(periods.S - periods.S.T)))
    return out


def cmd_periods(job):
    """Period data with quality diagnostics."""
    periods = load_or_compute_periods(job)
    report = _header('periods')
    report['periods'] = periods.to_json()
    report['quality'] = _quality(periods)
    if config.check and periods.genus:
        report['checks'] = []
        q = report['quality']
        _check('tau_symmetry', q['tau_asymmetry'], 0, 1e-8, report['checks'])
        _check('a_periods', q['a_period_residual'], 0, 1e-9, report['checks'])
    return report


########################################
#              DECOMPOSE               #
########################################
def _require_form(job):
    if job.form is None:
        raise CurveInputError("no form given (use --form or a job file)",
                              position='form')
    return job.form


def cmd_decompose(job):
    """
    The canonical decomposition of the job's form: times, second- and
    third-kind terms and the holomorphic coefficients, the latter both
    numerically and as an affine function of S.
    """
    R = _require_form(job)
    periods = load_or_compute_periods(job)
    d = decompose(job.curve, periods, R)
    report = _header('decompose')
    report['decomposition'] = d.to_json()
    if config.check:
        report['checks'] = []
        rng = np.random.default_rng(config.seed + 3)
        points = sample_points(job.curve, periods.cycles, 8, rng,
                               [(p.x, p.exclusion_radius()) for p in d.times.poles
                                if p.x is not None])
        x = np.array([p.x for p in points])
        y = np.array([p.y for p in points])
        err = np.abs(d.eval(x, y) - R(x, y))
        worst = int(np.argmax(err))
        _check('reconstruction', d.eval(x, y)[worst], R(x[worst], y[worst]),
               1e-7, report['checks'])
    return report


########################################
#              INTEGRATE               #
########################################
def _direct_complete(job, periods, d, gamma):
    """
    ∮ R dx over a loop combination by quadrature of R itself; small
    circles around poles take the residue from a trapezoidal sum on the
    pole's chart.
    """
    total = 0j
    for name, coeff in gamma.items():
        if name.startswith('C['):
            chart = d.times.pole(name[2:-1]).chart
            total += coeff * 2j * np.pi * residue_circle(job.form, chart)
        else:
            total += coeff * cycle_integral(periods, job.form.eval, name)
    return total


def cmd_integrate(job):
    """
    ∫ R dx over a loop combination (`gamma`) or an open arc, assembled
    from the decomposition; with checks enabled, compared with direct
    quadrature of R.
    """
    R = _require_form(job)
    if (job.gamma is None) == (job.arc is None):
        raise CurveInputError("give exactly one of a loop combination "
                              "(--gamma) or an arc (--arc)", position='gamma')
    periods = load_or_compute_periods(job)
    d = decompose(job.curve, periods, R)
    report = _header('integrate')
    if job.gamma is not None:
        value = integrate_complete(job.curve, periods, d, job.gamma)
        report['gamma'] = job.gamma
    else:
        value = integrate_incomplete(job.curve, periods, d, job.arc)
        report['arc'] = job.arc.to_json()
    report['value'] = _encode(value)
    if config.check:
        report['checks'] = []
        if job.gamma is not None:
            reference = _direct_complete(job, periods, d, job.gamma)
        else:
            reference = integrate_direct(job.curve, R, job.arc)
        _check('direct_quadrature', value, reference, 1e-6, report['checks'])
    return report


COMMANDS = {
    'analyze': cmd_analyze,
    'periods': cmd_periods,
    'decompose': cmd_decompose,
    'integrate': cmd_integrate
}

