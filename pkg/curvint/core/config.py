"""
Curvint's global configuration object.

The `CurvintConfig` class is a singleton whose instance is accessible as
`curvint.config`. Its fields hold the numeric tolerances, step controls
and reproducibility settings shared by every stage of the pipeline
(root finding, sheet tracking, quadrature, theta truncation). The config
object's repr displays the current values of all fields, and multiple
fields can be set simultaneously via the `curvint.configure()` function.
Fields can also be accessed and set via attributes of the top-level
`curvint` module.
"""


__all__ = ['CurvintConfig']


import pprint
from io import StringIO
from numbers import Integral, Real
from pathlib import Path

from curvint.core.exceptions import CurvintConfigError


SCHEMA_VERSION = '1.0'


class SingletonConfig(type):
    """Metaclass that enforces singleton behavior for `CurvintConfig`"""

    __instance = None

    def __call__(cls, *args, **kwargs):
        if cls.__instance is None:
            cls.__instance = super().__call__(*args, **kwargs)
        return cls.__instance


def _positive_float(field, value, upper=None):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise CurvintConfigError(field, 'field must be a real number')
    value = float(value)
    if not value > 0:
        raise CurvintConfigError(field, 'field must be positive')
    if upper is not None and value >= upper:
        raise CurvintConfigError(field, f'field must be less than {upper}')
    return value


def _positive_int(field, value, lower=1):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise CurvintConfigError(field, 'field must be an integer')
    if value < lower:
        raise CurvintConfigError(field, f'field must be at least {lower}')
    return int(value)


class CurvintConfig(metaclass=SingletonConfig):
    """
    The global `curvint` config object.

    Defines the following fields:

        **Configurable fields**:
            precision : int
                Working precision in decimal digits (default: `15`).
                Values above 15 switch root finding to extended
                precision (mpmath) polishing.
            root_tol : float
                Tolerance used to accept roots of univariate polynomials
                and points on the curve (default: `1e-10`).
            rank_tol : float
                Relative singular value threshold for numerical rank
                decisions (default: `1e-8`).
            quad_tol : float
                Absolute error target per quadrature segment (default:
                `1e-12`).
            quad_max_depth : int
                Maximum bisection depth of the adaptive quadrature
                (default: `30`).
            track_min_step : float
                Smallest x-step sheet tracking may take before giving up
                (default: `1e-9`).
            separation_ratio : float
                Minimum ratio between the second-closest and closest
                fiber roots for a tracking step to be accepted
                (default: `3.0`).
            clearance_fraction : float
                Radius of the tubes around default cycles, as a fraction
                of the smallest gap between critical x-values (default:
                `0.125`).
            theta_max_radius : int
                Cap on the truncation radius of theta lattice sums
                (default: `40`).
            max_pole_order : int
                Cap on the pole order searched for when computing times
                (default: `64`).
            seed : int
                Seed for every pseudo-random choice (origin, collocation
                points; default: `0`).
            cache_dir : pathlib.Path or None
                Directory where period data are cached between runs.
                `None` (default) disables caching.
            check : bool
                If `True` (default: `False`), commands run independent
                cross-checks and fail when they disagree.
        **Read-only fields**:
            schema_version : str
                Version of the JSON documents read and written by
                `curvint`.
    """

    def __init__(self):
        ########################################
        #           READ-ONLY FIELDS           #
        ########################################
        self._schema_version = SCHEMA_VERSION
        self._repr_formatter = pprint.PrettyPrinter(sort_dicts=False)
        ########################################
        #          CONFIGURABLE FIELDS         #
        ########################################
        self._precision = 15
        self._root_tol = 1e-10
        self._rank_tol = 1e-8
        self._quad_tol = 1e-12
        self._quad_max_depth = 30
        self._track_min_step = 1e-9
        self._separation_ratio = 3.0
        self._clearance_fraction = 0.125
        self._theta_max_radius = 40
        self._max_pole_order = 64
        self._seed = 0
        self._cache_dir = None
        self._check = False

    def __repr__(self):
        cls_name = self.__class__.__name__
        base_indent = len(cls_name) + 1
        attrs_in_repr = [
            'precision',
            'root_tol',
            'rank_tol',
            'quad_tol',
            'quad_max_depth',
            'track_min_step',
            'separation_ratio',
            'clearance_fraction',
            'theta_max_radius',
            'max_pole_order',
            'seed',
            'cache_dir',
            'check',
            'schema_version'
        ]
        newline_delim = ',\n' + ' ' * base_indent
        last_item_ix = len(attrs_in_repr) - 1
        stream = StringIO()
        stream.write(f'{cls_name}(')
        for i, attr_name in enumerate(attrs_in_repr):
            attr_indent = base_indent + len(attr_name) + 1
            is_last = i == last_item_ix
            stream.write(f'{attr_name}=')
            self._repr_formatter._format(getattr(self, f'_{attr_name}'),
                                         stream=stream,
                                         indent=attr_indent,
                                         allowance=int(not is_last),
                                         context={},
                                         level=0)
            if not is_last:
                stream.write(newline_delim)
        repr_ = stream.getvalue()
        stream.close()
        return repr_ + ')'

    @property
    def cache_dir(self):
        return self._cache_dir

    @cache_dir.setter
    def cache_dir(self, value):
        if value is None:
            self._cache_dir = None
            return
        if not isinstance(value, (str, Path)):
            raise CurvintConfigError(
                'cache_dir', 'field may be a str, pathlib.Path, or None'
            )
        path = Path(value).expanduser()
        if path.exists() and not path.is_dir():
            raise CurvintConfigError('cache_dir',
                                     f"'{path}' exists and is not a directory")
        self._cache_dir = path

    @property
    def check(self):
        return self._check

    @check.setter
    def check(self, value):
        if not isinstance(value, bool):
            raise CurvintConfigError('check', "field may be 'True' or 'False'")
        self._check = value

    @property
    def clearance_fraction(self):
        return self._clearance_fraction

    @clearance_fraction.setter
    def clearance_fraction(self, value):
        self._clearance_fraction = _positive_float('clearance_fraction',
                                                   value, upper=0.5)

    @property
    def max_pole_order(self):
        return self._max_pole_order

    @max_pole_order.setter
    def max_pole_order(self, value):
        self._max_pole_order = _positive_int('max_pole_order', value)

    @property
    def precision(self):
        return self._precision

    @precision.setter
    def precision(self, value):
        value = _positive_int('precision', value, lower=4)
        if value > 100:
            raise CurvintConfigError('precision',
                                     'field may not exceed 100 digits')
        self._precision = value

    @property
    def quad_max_depth(self):
        return self._quad_max_depth

    @quad_max_depth.setter
    def quad_max_depth(self, value):
        self._quad_max_depth = _positive_int('quad_max_depth', value)

    @property
    def quad_tol(self):
        return self._quad_tol

    @quad_tol.setter
    def quad_tol(self, value):
        self._quad_tol = _positive_float('quad_tol', value, upper=1)

    @property
    def rank_tol(self):
        return self._rank_tol

    @rank_tol.setter
    def rank_tol(self, value):
        self._rank_tol = _positive_float('rank_tol', value, upper=1)

    @property
    def root_tol(self):
        return self._root_tol

    @root_tol.setter
    def root_tol(self, value):
        self._root_tol = _positive_float('root_tol', value, upper=1)

    @property
    def schema_version(self):
        return self._schema_version

    @schema_version.setter
    def schema_version(self, _):
        raise CurvintConfigError('schema_version', 'field is read-only')

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = _positive_int('seed', value, lower=0)

    @property
    def separation_ratio(self):
        return self._separation_ratio

    @separation_ratio.setter
    def separation_ratio(self, value):
        value = _positive_float('separation_ratio', value)
        if value <= 1:
            raise CurvintConfigError('separation_ratio',
                                     'field must be greater than 1')
        self._separation_ratio = value

    @property
    def theta_max_radius(self):
        return self._theta_max_radius

    @theta_max_radius.setter
    def theta_max_radius(self, value):
        self._theta_max_radius = _positive_int('theta_max_radius', value)

    @property
    def track_min_step(self):
        return self._track_min_step

    @track_min_step.setter
    def track_min_step(self, value):
        self._track_min_step = _positive_float('track_min_step', value,
                                               upper=1)
