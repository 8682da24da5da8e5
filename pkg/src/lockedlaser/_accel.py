"""Backend selection for the compiled kernels.

Numba is used when it imports and ``LOCKEDLASER_DISABLE_NUMBA`` is unset or
``0``. Otherwise every kernel runs its vectorised numpy/scipy twin.
"""

import os

ENV_FLAG = "LOCKEDLASER_DISABLE_NUMBA"


def _disabled_by_env():
    return os.environ.get(ENV_FLAG, "0").strip().lower() not in ("", "0", "false", "no")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()

NJIT_OPTIONS = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


def njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(**NJIT_OPTIONS)(func)


def resolve_backend(backend=None):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend
