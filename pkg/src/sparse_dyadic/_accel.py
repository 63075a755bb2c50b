"""Backend switch for the hot kernels.

``SPARSE_DYADIC_NUMBA=0`` forces the pure-numpy path; anything else uses numba
when it imports. ``SPARSE_DYADIC_THREADS`` caps numba's thread pool.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None


def _env_flag() -> bool:
    return os.environ.get("SPARSE_DYADIC_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _env_flag()


def njit(fn):
    """Compile ``fn`` with numba if available; the raw function otherwise."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def set_threads(count: int | None = None) -> None:
    if numba is None:
        return
    if count is None:
        raw = os.environ.get("SPARSE_DYADIC_THREADS")
        if not raw:
            return
        count = int(raw)
    numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
