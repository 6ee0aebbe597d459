"""Hot numeric kernels: matrix exponential and its directional derivative.

Both functions are written in the numba-compatible numpy subset and run
either compiled or as plain numpy depending on :data:`qocgrape.backend.ACTIVE_BACKEND`.
Callers are expected to pass C-contiguous complex128 arrays (the public
wrappers in :mod:`qocgrape.linalg` normalize inputs) so that only one
compiled specialization exists per kernel.
"""

import numpy as np

from .backend import jit_kernel

# Largest 1-norm for which the degree-13 diagonal Pade approximant meets
# double precision without scaling.
_THETA_13 = 5.371920351148152


def _expm_impl(a):
    n = a.shape[0]
    b0 = 64764752532480000.0
    b1 = 32382376266240000.0
    b2 = 7771770303897600.0
    b3 = 1187353796428800.0
    b4 = 129060195264000.0
    b5 = 10559470521600.0
    b6 = 670442572800.0
    b7 = 33522128640.0
    b8 = 1323241920.0
    b9 = 40840800.0
    b10 = 960960.0
    b11 = 16380.0
    b12 = 182.0
    b13 = 1.0

    one_norm = np.max(np.sum(np.abs(a), axis=0))
    squarings = 0
    if one_norm > _THETA_13:
        squarings = int(np.ceil(np.log2(one_norm / _THETA_13)))

    scaled = a * (0.5**squarings)
    ident = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        ident[i, i] = 1.0

    a2 = scaled @ scaled
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = scaled @ (
        a6 @ (b13 * a6 + b11 * a4 + b9 * a2)
        + b7 * a6
        + b5 * a4
        + b3 * a2
        + b1 * ident
    )
    v = a6 @ (b12 * a6 + b10 * a4 + b8 * a2) + b6 * a6 + b4 * a4 + b2 * a2 + b0 * ident
    f = np.ascontiguousarray(np.linalg.solve(v - u, u + v))
    for _ in range(squarings):
        f = f @ f
    return f


expm_kernel = jit_kernel(_expm_impl)


def _expm_frechet_impl(a, e):
    # d/deps expm(a + eps*e) at 0 is the top-right block of the exponential
    # of the doubled matrix [[a, e], [0, a]].
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    block[:n, :n] = a
    block[:n, n:] = e
    block[n:, n:] = a
    big = expm_kernel(block)
    return big[:n, n:].copy()


expm_frechet_kernel = jit_kernel(_expm_frechet_impl)


def warmup():
    """Trigger kernel compilation so timing runs see steady-state costs."""
    probe = np.ascontiguousarray(-0.1j * np.array([[1.0, 0.5], [0.5, -1.0]]), dtype=np.complex128)
    expm_kernel(probe)
    expm_frechet_kernel(probe, probe)
