"""Optional numba compilation for the hot kernels.

Every kernel is written as plain Python over numpy arrays, so with
``MULTICERT_NO_JIT=1`` (or numba missing) they run uncompiled with
identical results, only slower.
"""
import os

try:
    if os.environ.get("MULTICERT_NO_JIT"):
        raise ImportError
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None


def njit(func):
    if _njit is None:
        return func
    return _njit(cache=True, nogil=True)(func)


JIT_ENABLED = _njit is not None
