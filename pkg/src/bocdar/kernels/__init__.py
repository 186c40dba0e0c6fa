"""Hot loops of the recursions, available as numba and numpy implementations."""

from types import SimpleNamespace

from .._backend import BACKENDS, HAVE_NUMBA, default_backend_name

_NAMES = (
    "intercept_window",
    "bocd_tables",
    "wa_columns",
    "ar_tables",
    "g_table",
    "bocpd_tables",
)
_cache = {}


def get_kernels(name=None):
    """Return a namespace with the kernel functions of the requested backend."""
    if name is None:
        name = default_backend_name()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not installed")
    if name not in _cache:
        if name == "numba":
            from . import _numba as mod
        else:
            from . import _numpy as mod
        ns = SimpleNamespace(name=name, **{k: getattr(mod, k) for k in _NAMES})
        _cache[name] = ns
    return _cache[name]
