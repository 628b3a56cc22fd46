"""Numba switch.

Set ``SPARSEGPC_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy path.
The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("SPARSEGPC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dep, but stay importable
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
