"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from qocgrape import ControlGrid, CostSpec, HamiltonianModel, TimeGrid
from qocgrape.kernels import warmup

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    warmup()


def embed(op2: np.ndarray, site: int, qubits: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for i in range(qubits):
        out = np.kron(out, op2 if i == site else I2)
    return out


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2.0


def random_complex(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


def random_states(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    block = rng.normal(size=(dim, count)) + 1j * rng.normal(size=(dim, count))
    return block / np.linalg.norm(block, axis=0)[None, :]


def chain_model(qubits: int) -> HamiltonianModel:
    """z drifts with weak zz coupling; x/y controls on the first qubit."""
    dim = 2**qubits
    h0 = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(qubits):
        h0 += 0.5 * embed(PAULI_Z, i, qubits)
    for i in range(qubits - 1):
        h0 += 0.1 * embed(PAULI_Z, i, qubits) @ embed(PAULI_Z, i + 1, qubits)
    return HamiltonianModel(h0, [embed(PAULI_X, 0, qubits), embed(PAULI_Y, 0, qubits)])


def make_instance(
    qubits: int,
    n_steps: int,
    seed: int,
    dt: float = 0.1,
    n_state_cols: int = 1,
    all_terms: bool = False,
):
    """A random problem instance; with ``all_terms`` every weight is active."""
    rng = np.random.default_rng(seed)
    dim = 2**qubits
    model = chain_model(qubits)
    grid = TimeGrid.uniform(n_steps, dt)
    controls = ControlGrid(
        rng.uniform(-0.4, 0.4, (model.n_controls, n_steps + 1)), grid.knot_times
    )
    psi0 = random_states(rng, dim, n_state_cols)
    if all_terms:
        spec = CostSpec(
            w_gate=1.0,
            w_running_gate=0.3,
            w_running_state=0.2,
            w_final_state=0.5,
            w_energy=0.01,
            w_smoothness=0.02,
            w_forbidden=0.1,
            target_gate=random_unitary(rng, dim),
            target_states=random_states(rng, dim, n_state_cols),
            forbidden_states=random_states(rng, dim, n_state_cols),
        )
    else:
        spec = CostSpec(w_gate=1.0, target_gate=random_unitary(rng, dim))
    return model, grid, controls, spec, psi0


def expm_eig_oracle(a: np.ndarray) -> np.ndarray:
    """Eigendecomposition-based exponential; valid for anti-Hermitian input."""
    h = 1j * a  # Hermitian when a is anti-Hermitian
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)[None, :]) @ v.conj().T
