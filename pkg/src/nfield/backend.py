"""Backend selection for the hot quadrature kernels.

The compiled (numba) path is used when available; setting the environment
variable ``NFIELD_DISABLE_NUMBA=1`` forces the pure-numpy path. Models
with callable (non-built-in) firing rates always run on the numpy path,
since the compiled kernels only know the built-in rate family.
"""
from __future__ import annotations

import os


def _numba_disabled() -> bool:
    return os.environ.get("NFIELD_DISABLE_NUMBA", "") not in ("", "0")


try:
    if _numba_disabled():
        raise ImportError("numba disabled by NFIELD_DISABLE_NUMBA")
    from . import _accel
    _HAVE_ACCEL = True
except ImportError:  # pragma: no cover - depends on environment
    _accel = None
    _HAVE_ACCEL = False


def have_accel() -> bool:
    return _HAVE_ACCEL


def active_backend() -> str:
    return "numba" if _HAVE_ACCEL else "numpy"


def accel_module():
    """The compiled kernel module, or None when running pure numpy."""
    return _accel
