import pytest

import curvint
from curvint.core.config import CurvintConfig
from curvint.core.exceptions import CurvintConfigError, CurvintError

from utils import raises_with


def test_config_is_singleton():
    assert CurvintConfig() is curvint.config


def test_defaults():
    config = curvint.config
    assert config.precision == 15
    assert config.root_tol == 1e-10
    assert config.rank_tol == 1e-8
    assert config.quad_tol == 1e-12
    assert config.quad_max_depth == 30
    assert config.separation_ratio == 3.0
    assert config.clearance_fraction == 0.125
    assert config.theta_max_radius == 40
    assert config.seed == 0
    assert config.cache_dir is None
    assert config.check is False
    assert config.schema_version == '1.0'


def test_module_attributes_proxy_config():
    curvint.quad_tol = 1e-10
    assert curvint.config.quad_tol == 1e-10
    assert curvint.quad_tol == 1e-10


def test_unknown_module_attribute():
    with pytest.raises(AttributeError, match='no attribute'):
        curvint.not_a_field


@pytest.mark.parametrize('field, value', [
    ('precision', 3),
    ('precision', 101),
    ('precision', 20.0),
    ('root_tol', 0),
    ('root_tol', 2.0),
    ('quad_tol', -1e-12),
    ('quad_max_depth', 0),
    ('separation_ratio', 1.0),
    ('clearance_fraction', 0.5),
    ('seed', -1),
    ('seed', True),
    ('check', 'yes'),
    ('cache_dir', 42)
])
def test_invalid_values(field, value):
    with pytest.raises(CurvintConfigError) as exc_info:
        setattr(curvint.config, field, value)
    raises_with(exc_info.value, field=field)
    assert str(exc_info.value).startswith(f"'curvint.config.{field}': ")


def test_schema_version_is_read_only():
    with pytest.raises(CurvintConfigError, match='read-only'):
        curvint.config.schema_version = '2.0'


def test_cache_dir_accepts_paths(tmp_path):
    curvint.config.cache_dir = str(tmp_path)
    assert curvint.config.cache_dir == tmp_path
    curvint.config.cache_dir = None
    assert curvint.config.cache_dir is None


def test_cache_dir_rejects_files(tmp_path):
    target = tmp_path / 'file.json'
    target.write_text('{}')
    with pytest.raises(CurvintConfigError, match='not a directory'):
        curvint.config.cache_dir = target


def test_configure_sets_several_fields():
    curvint.configure(precision=20, seed=7, check=True)
    assert (curvint.config.precision, curvint.config.seed, curvint.config.check) \
        == (20, 7, True)


def test_configure_rolls_back_on_invalid_value():
    with pytest.raises(CurvintConfigError):
        curvint.configure(precision=20, seed=-3)
    assert curvint.config.precision == 15
    assert curvint.config.seed == 0


def test_configure_rejects_unknown_fields():
    with pytest.raises(CurvintConfigError, match='no such field') as exc_info:
        curvint.configure(seed=5, tolerance=1e-3)
    raises_with(exc_info.value, field='tolerance')
    assert curvint.config.seed == 0


def test_config_errors_are_input_errors():
    try:
        curvint.config.rank_tol = 'small'
    except CurvintError as e:
        assert e.exit_code == 2
    else:
        pytest.fail("expected a CurvintConfigError")


def test_repr_lists_fields():
    text = repr(curvint.config)
    assert text.startswith('CurvintConfig(')
    for name in ('precision=15', 'seed=0', "schema_version='1.0'"):
        assert name in text
