"""Dense complex linear algebra for unitary propagation.

The matrix exponential uses a degree-13 diagonal Pade approximant with
norm-based scaling and squaring.  Its directional (Frechet) derivative is
obtained by exponentiating the doubled block matrix ``[[A, E], [0, A]]``,
whose top-right block equals the derivative; this keeps the derivative
consistent with the exponential itself to machine precision.  The
reverse-mode adjoint is the Frechet derivative evaluated at the conjugate
transpose: ``<G, L(A, E)> == <L(A^dag, G), E>`` in the Frobenius inner
product for every direction ``E``.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation
from .kernels import expm_frechet_kernel, expm_kernel

# Hermiticity is checked entrywise; unitarity and state norms in the
# Frobenius/2-norm with slack growing with dimension.
HERMITIAN_TOL = 1e-12
UNITARY_TOL_PER_DIM = 1e-10
STATE_NORM_TOL = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a square, C-contiguous complex128 matrix."""
    m = np.ascontiguousarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ContractViolation(f"expected a square matrix, got shape {np.shape(a)}")
    return m


def as_state_block(a) -> np.ndarray:
    """Coerce to a (dim, count) complex128 block of state columns."""
    m = np.ascontiguousarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ContractViolation(f"expected a (dim, count) state block, got shape {np.shape(a)}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[0]:
        raise ContractViolation(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def trace(a: np.ndarray) -> complex:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"trace needs a square matrix, got shape {a.shape}")
    return complex(np.trace(a))


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """<A, B> = sum(conj(A) * B) = tr(A^dag B)."""
    if a.shape != b.shape:
        raise ContractViolation(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def expm(a) -> np.ndarray:
    m = as_complex_matrix(a)
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix exponential needs finite entries")
    return expm_kernel(m)


def expm_frechet(a, e) -> np.ndarray:
    """Directional derivative L(A, E) of the matrix exponential at A."""
    base = as_complex_matrix(a)
    direction = as_complex_matrix(e)
    if base.shape != direction.shape:
        raise ContractViolation(f"shape mismatch: {base.shape} vs {direction.shape}")
    return expm_frechet_kernel(base, direction)


def expm_vjp(a, gbar) -> np.ndarray:
    """Adjoint of the exponential's derivative: pulls a cotangent back to A."""
    base = as_complex_matrix(a)
    cotangent = as_complex_matrix(gbar)
    if base.shape != cotangent.shape:
        raise ContractViolation(f"shape mismatch: {base.shape} vs {cotangent.shape}")
    return expm_frechet_kernel(np.ascontiguousarray(base.conj().T), cotangent)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(m) <= tol


def unitarity_defect(m: np.ndarray) -> float:
    """Frobenius norm of ``M^dag M - I``."""
    dim = m.shape[0]
    return float(np.linalg.norm(dagger(m) @ m - np.eye(dim)))


def is_unitary(m: np.ndarray, tol: float | None = None) -> bool:
    if tol is None:
        tol = UNITARY_TOL_PER_DIM * m.shape[0]
    return unitarity_defect(m) <= tol


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)
