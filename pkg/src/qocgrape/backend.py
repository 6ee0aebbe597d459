"""Selection of the numeric-kernel backend.

The hot kernels in :mod:`qocgrape.kernels` are written in the
numba-compatible numpy subset and compiled with ``@njit`` when numba is
available.  Set ``QOCGRAPE_BACKEND=numpy`` to force the pure-numpy fallback
(useful for debugging and for benchmarking the compiled kernels against it,
see ``benchmarks/backend_bench.py``), or ``QOCGRAPE_BACKEND=numba`` to fail
loudly when numba cannot be imported.
"""

import os

ENV_VAR = "QOCGRAPE_BACKEND"
_CHOICES = ("numba", "numpy")


def _select() -> str:
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if choice and choice not in _CHOICES:
        raise RuntimeError(f"{ENV_VAR} must be one of {_CHOICES}, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")
        return "numpy"
    return "numba"


ACTIVE_BACKEND = _select()


def jit_kernel(fn):
    """Compile ``fn`` with numba when the numba backend is active."""
    if ACTIVE_BACKEND == "numba":
        from numba import njit

        return njit(cache=True)(fn)
    return fn
