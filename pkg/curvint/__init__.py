"""
Top-level `curvint` module. When imported, the code in this module:

    - initializes the global `curvint.config` object
    - attaches a `NullHandler` to the package logger
    - exposes the main entry points of each pipeline stage

Note that at runtime, this module's object (i.e., "`curvint`", given
"`import curvint`") will be an instance of the `ConfigProxyModule`
class, so config fields can be read and set as module attributes.
"""


__all__ = [
    'BivarPoly',
    'build_newton',
    'compute_periods',
    'config',
    'configure',
    'CurvintError',
    'decompose',
    'default_cycles_hyperelliptic',
    'integrate_complete',
    'integrate_incomplete',
    'RationalOneForm'
]


import logging
import sys
from importlib import metadata
from types import ModuleType

from curvint.core.config import CurvintConfig


__version__ = metadata.version('curvint')

logging.getLogger(__name__).addHandler(logging.NullHandler())

# config must be instantiated before importing the computational modules
config = CurvintConfig()


from curvint.algebra import BivarPoly
from curvint.core.exceptions import CurvintError
from curvint.decompose import (
    decompose,
    integrate_complete,
    integrate_incomplete
)
from curvint.forms import RationalOneForm
from curvint.periods import compute_periods
from curvint.polygon import build_newton
from curvint.surface import default_cycles_hyperelliptic


class ConfigProxyModule(ModuleType):
    """
    Subclass of Python's built-in `module` type that enables accessing
    `curvint.config` fields via the top-level `curvint` namespace.

    Attribute lookups that fail on the module object are forwarded to
    `curvint.config`, and assignments to names the config object defines
    are forwarded to it as well. For example:
    ```python
    curvint.config.quad_tol = 1e-13
    ```
    is equivalent to:
    ```python
    curvint.quad_tol = 1e-13
    ```
    """

    def __getattr__(self, name):
        try:
            return getattr(config, name)
        except AttributeError:
            raise AttributeError(
                f'module {__name__!r} has no attribute {name!r}'
            ) from None

    def __setattr__(self, name, value):
        if hasattr(config, name):
            setattr(config, name, value)
        else:
            super().__setattr__(name, value)


def configure(**fields):
    """
    Set multiple `curvint.config` fields at once.

    Parameters
    ----------
    **fields
        Field names and the values to assign to them. See
        `curvint.core.config.CurvintConfig` for the available fields.

    Raises
    -------
    core.exceptions.CurvintConfigError
        If a config field is assigned an invalid value or doesn't exist.
        In that case no field is changed.
    """
    old_values = {}
    for name, new_value in fields.items():
        if not hasattr(config, name) or name.startswith('_'):
            for _name, old_value in old_values.items():
                setattr(config, f"_{_name}", old_value)
            from curvint.core.exceptions import CurvintConfigError
            raise CurvintConfigError(name, 'no such field')
        old_value = getattr(config, name)
        try:
            setattr(config, name, new_value)
        except Exception:
            # if one assignment fails, no config fields are updated
            for _name, old_value in old_values.items():
                setattr(config, f"_{_name}", old_value)
            raise
        old_values[name] = old_value


sys.modules[__name__].__class__ = ConfigProxyModule
