"""Numba toggle.

Hot loops live in :mod:`gcflow.kernels` in two flavours: an ``@njit`` loop
version and a vectorised numpy version.  The numba path is used when numba
imports cleanly and ``GCFLOW_DISABLE_NUMBA`` is unset (or ``0``).
"""
import os

_flag = os.environ.get("GCFLOW_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    if DISABLED_BY_ENV:
        raise ImportError
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(**kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        opts = {"cache": True}
        opts.update(kwargs)
        return numba.njit(**opts)

    def wrap(fn):
        return fn

    return wrap


prange = numba.prange if HAVE_NUMBA else range


def set_threads(n):
    """Size numba's pool; returns the count actually in effect."""
    if not HAVE_NUMBA or n is None:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n
