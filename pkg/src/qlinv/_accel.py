"""Selection between numba-compiled kernels and plain numpy.

Set ``QLINV_NO_NUMBA=1`` in the environment before import to force the numpy
fallback; it is also used automatically when numba cannot be imported.
"""
from __future__ import annotations

import os

_disabled = os.environ.get("QLINV_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:  # pragma: no cover - depends on the environment
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def pick(loop_impl, numpy_impl):
    """Compiled loop kernel when numba is active, else the numpy version."""
    if HAVE_NUMBA:
        return numba.njit(cache=False, fastmath=False)(loop_impl)
    return numpy_impl


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
