"""Selects the implementation of the hot numeric kernels.

The numba path is used when numba imports cleanly.  Setting the environment
variable ``BOCDAR_BACKEND=numpy`` (or ``BOCDAR_DISABLE_NUMBA=1``) forces the
pure-numpy path, which is also what you get when numba is missing.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def default_backend_name():
    requested = os.environ.get("BOCDAR_BACKEND", "").strip().lower()
    if requested and requested not in BACKENDS:
        raise ValueError(
            f"BOCDAR_BACKEND must be one of {BACKENDS}, got {requested!r}"
        )
    if requested == "numpy" or _env_flag("BOCDAR_DISABLE_NUMBA"):
        return "numpy"
    return "numba" if HAVE_NUMBA else "numpy"
