"""Numba switch.

Hot kernels are written twice: a loop version compiled with ``numba.njit`` and
a vectorised numpy version. ``GEOLINK_NUMBA=0`` (or a missing numba install)
selects the numpy path at import time.
"""
import os
import warnings

_flag = os.environ.get("GEOLINK_NUMBA", "1").strip().lower()
WANT_NUMBA = _flag not in ("0", "false", "no", "off")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    _njit = None

USE_NUMBA = WANT_NUMBA and HAVE_NUMBA

if WANT_NUMBA and not HAVE_NUMBA:  # pragma: no cover
    warnings.warn("numba is not installed - falling back to numpy kernels")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, otherwise a passthrough."""
    if _njit is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
