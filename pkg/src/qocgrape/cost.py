"""Cost terms, their weighted total, and the adjoint seeds of each term.

Seven terms make up the objective: gate infidelity of the final propagator,
running gate infidelity averaged over steps, running state infidelity,
final-state infidelity, control energy, control smoothness, and forbidden
state occupation.  Gate overlaps are normalized traces; state overlaps of
multi-column blocks are averaged over corresponding columns so every
infidelity stays in [0, 1].  Running sums go over steps 1..N.

Adjoint seeds use the convention ``d(cost) = Re <seed, d(value)>`` in the
complex Frobenius inner product, which composes with the matmul/expm
adjoints in :mod:`qocgrape.gradient` and reduces to the ordinary gradient
on the real control amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import ContractViolation

WEIGHT_NAMES = (
    "gate",
    "running_gate",
    "running_state",
    "final_state",
    "energy",
    "smoothness",
    "forbidden",
)


@dataclass
class CostSpec:
    """Term weights plus the gate/state targets they refer to."""

    w_gate: float = 0.0
    w_running_gate: float = 0.0
    w_running_state: float = 0.0
    w_final_state: float = 0.0
    w_energy: float = 0.0
    w_smoothness: float = 0.0
    w_forbidden: float = 0.0
    target_gate: np.ndarray | None = None
    target_states: np.ndarray | None = None
    forbidden_states: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in WEIGHT_NAMES:
            w = getattr(self, f"w_{name}")
            if not (np.isfinite(w) and w >= 0):
                raise ContractViolation(f"weight {name!r} must be finite and >= 0")
        if self.target_gate is not None:
            self.target_gate = linalg.as_complex_matrix(self.target_gate)
            if not linalg.is_unitary(self.target_gate):
                raise ContractViolation("target gate must be unitary")
        if self.target_states is not None:
            self.target_states = linalg.as_state_block(self.target_states)
        if self.forbidden_states is not None:
            self.forbidden_states = linalg.as_state_block(self.forbidden_states)
        if (self.w_gate > 0 or self.w_running_gate > 0) and self.target_gate is None:
            raise ContractViolation("gate cost terms need a target gate")
        if (self.w_running_state > 0 or self.w_final_state > 0) and self.target_states is None:
            raise ContractViolation("state cost terms need target states")
        if self.w_forbidden > 0 and self.forbidden_states is None:
            raise ContractViolation("forbidden-occupation term needs forbidden states")

    @property
    def needs_states(self) -> bool:
        return self.w_running_state > 0 or self.w_final_state > 0 or self.w_forbidden > 0

    @property
    def needs_reverse_sweep(self) -> bool:
        """True when some term depends on the trajectory (not only on controls)."""
        return (
            self.w_gate > 0
            or self.w_running_gate > 0
            or self.w_running_state > 0
            or self.w_final_state > 0
            or self.w_forbidden > 0
        )

    def weights(self) -> dict[str, float]:
        return {name: float(getattr(self, f"w_{name}")) for name in WEIGHT_NAMES}


# ---------------------------------------------------------------------------
# per-step overlap primitives

def gate_overlap_sq(k: np.ndarray, k_target: np.ndarray) -> float:
    """|tr(K_target^dag K) / D|^2."""
    if k.shape != k_target.shape:
        raise ContractViolation(f"shape mismatch: {k.shape} vs {k_target.shape}")
    z = np.vdot(k_target, k) / k.shape[0]
    return float(np.real(z * np.conj(z)))


def column_overlaps(states: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Per-column inner products ``<reference_c | states_c>``."""
    if states.shape != reference.shape:
        raise ContractViolation(f"shape mismatch: {states.shape} vs {reference.shape}")
    return np.einsum("ic,ic->c", np.conj(reference), states)


def state_overlap_sq(states: np.ndarray, reference: np.ndarray) -> float:
    """Mean over columns of the squared overlap magnitude."""
    o = column_overlaps(states, reference)
    return float(np.mean(np.abs(o) ** 2))


# ---------------------------------------------------------------------------
# cost terms

def gate_infidelity(k_final: np.ndarray, k_target: np.ndarray) -> float:
    return 1.0 - gate_overlap_sq(k_final, k_target)


def running_gate_infidelity(propagators: Sequence[np.ndarray], k_target: np.ndarray) -> float:
    if len(propagators) == 0:
        raise ContractViolation("running gate infidelity needs at least one propagator")
    mean = np.mean([gate_overlap_sq(k, k_target) for k in propagators])
    return float(1.0 - mean)


def running_state_infidelity(states_seq: Sequence[np.ndarray], psi_target: np.ndarray) -> float:
    if len(states_seq) == 0:
        raise ContractViolation("running state infidelity needs at least one state")
    mean = np.mean([state_overlap_sq(psi, psi_target) for psi in states_seq])
    return float(1.0 - mean)


def final_state_infidelity(psi_final: np.ndarray, psi_target: np.ndarray) -> float:
    return 1.0 - state_overlap_sq(psi_final, psi_target)


def control_energy(values: np.ndarray) -> float:
    return float(np.sum(values**2))


def control_smoothness(values: np.ndarray) -> float:
    return float(np.sum(np.diff(values, axis=1) ** 2))


def forbidden_occupation(states_seq: Sequence[np.ndarray], psi_forbidden: np.ndarray) -> float:
    return float(sum(state_overlap_sq(psi, psi_forbidden) for psi in states_seq))


# ---------------------------------------------------------------------------
# report assembly

@dataclass
class CostReport:
    gate_infidelity: float = 0.0
    running_gate_infidelity: float = 0.0
    running_state_infidelity: float = 0.0
    final_state_infidelity: float = 0.0
    control_energy: float = 0.0
    control_smoothness: float = 0.0
    forbidden_occupation: float = 0.0
    total: float = 0.0

    CSV_COLUMNS = (
        "gate_infidelity",
        "running_gate_infidelity",
        "running_state_infidelity",
        "final_state_infidelity",
        "control_energy",
        "control_smoothness",
        "forbidden_occupation",
        "total",
    )

    def as_csv_row(self) -> dict:
        return {name: repr(getattr(self, name)) for name in self.CSV_COLUMNS}


@dataclass
class TrajectorySummary:
    """Streaming sums a forward sweep accumulates for the running terms."""

    n_steps: int
    k_final: np.ndarray
    psi_final: np.ndarray | None = None
    gate_overlap_sum: float = 0.0
    state_overlap_sum: float = 0.0
    forbidden_overlap_sum: float = 0.0


class CostAccumulator:
    """Observer adding one step's overlaps to the running sums."""

    def __init__(self, spec: CostSpec, include_inactive: bool = False):
        self.spec = spec
        self._track_gate = spec.target_gate is not None and (
            spec.w_running_gate > 0 or include_inactive
        )
        self._track_state = spec.target_states is not None and (
            spec.w_running_state > 0 or include_inactive
        )
        self._track_forbidden = spec.forbidden_states is not None and (
            spec.w_forbidden > 0 or include_inactive
        )
        self.gate_overlap_sum = 0.0
        self.state_overlap_sum = 0.0
        self.forbidden_overlap_sum = 0.0

    def observe(self, index: int, state) -> None:
        if self._track_gate:
            self.gate_overlap_sum += gate_overlap_sq(state.k_mat, self.spec.target_gate)
        if state.states is not None:
            if self._track_state:
                self.state_overlap_sum += state_overlap_sq(
                    state.states, self.spec.target_states
                )
            if self._track_forbidden:
                self.forbidden_overlap_sum += state_overlap_sq(
                    state.states, self.spec.forbidden_states
                )

    def summary(self, final_state) -> TrajectorySummary:
        return TrajectorySummary(
            n_steps=final_state.step,
            k_final=final_state.k_mat,
            psi_final=final_state.states,
            gate_overlap_sum=self.gate_overlap_sum,
            state_overlap_sum=self.state_overlap_sum,
            forbidden_overlap_sum=self.forbidden_overlap_sum,
        )


def total_cost(
    spec: CostSpec,
    summary: TrajectorySummary,
    control_values: np.ndarray,
    include_inactive: bool = False,
) -> CostReport:
    """Weighted sum of the active terms.

    Terms with zero weight (or missing targets) are skipped and reported as
    zero; the gate infidelity is always reported when a target gate exists
    because optimizer stopping is phrased in terms of it.
    """
    report = CostReport()
    n = summary.n_steps
    if spec.target_gate is not None:
        report.gate_infidelity = gate_infidelity(summary.k_final, spec.target_gate)
    if spec.target_gate is not None and (spec.w_running_gate > 0 or include_inactive):
        report.running_gate_infidelity = 1.0 - summary.gate_overlap_sum / n
    if summary.psi_final is not None and spec.target_states is not None:
        if spec.w_running_state > 0 or include_inactive:
            report.running_state_infidelity = 1.0 - summary.state_overlap_sum / n
        if spec.w_final_state > 0 or include_inactive:
            report.final_state_infidelity = final_state_infidelity(
                summary.psi_final, spec.target_states
            )
    if summary.psi_final is not None and spec.forbidden_states is not None:
        if spec.w_forbidden > 0 or include_inactive:
            report.forbidden_occupation = summary.forbidden_overlap_sum
    if spec.w_energy > 0 or include_inactive:
        report.control_energy = control_energy(control_values)
    if spec.w_smoothness > 0 or include_inactive:
        report.control_smoothness = control_smoothness(control_values)

    report.total = (
        spec.w_gate * report.gate_infidelity
        + spec.w_running_gate * report.running_gate_infidelity
        + spec.w_running_state * report.running_state_infidelity
        + spec.w_final_state * report.final_state_infidelity
        + spec.w_energy * report.control_energy
        + spec.w_smoothness * report.control_smoothness
        + spec.w_forbidden * report.forbidden_occupation
    )
    return report


# ---------------------------------------------------------------------------
# adjoint seeds

class CostSeeder:
    """Emits the adjoint seed of each active term at the step it touches.

    Per-step terms contribute their seed when the reverse sweep passes the
    corresponding step, so no strategy needs the full trajectory retained.
    """

    def __init__(self, spec: CostSpec, n_steps: int):
        self.spec = spec
        self.n_steps = n_steps
        dim = spec.target_gate.shape[0] if spec.target_gate is not None else None
        self._gate_coeff = (
            -2.0 * spec.w_gate / dim**2 if spec.w_gate > 0 else 0.0
        )
        self._running_gate_coeff = (
            -2.0 * spec.w_running_gate / (n_steps * dim**2)
            if spec.w_running_gate > 0
            else 0.0
        )
        s_t = spec.target_states.shape[1] if spec.target_states is not None else None
        s_f = spec.forbidden_states.shape[1] if spec.forbidden_states is not None else None
        self._running_state_coeff = (
            -2.0 * spec.w_running_state / (n_steps * s_t)
            if spec.w_running_state > 0
            else 0.0
        )
        self._final_state_coeff = (
            -2.0 * spec.w_final_state / s_t if spec.w_final_state > 0 else 0.0
        )
        self._forbidden_coeff = (
            2.0 * spec.w_forbidden / s_f if spec.w_forbidden > 0 else 0.0
        )

    def propagator_seed(self, k: np.ndarray, index: int) -> np.ndarray | None:
        coeff = self._running_gate_coeff
        if index == self.n_steps:
            coeff += self._gate_coeff
        if coeff == 0.0:
            return None
        z = np.vdot(self.spec.target_gate, k)
        return (coeff * z) * self.spec.target_gate

    def state_seed(self, states: np.ndarray, index: int) -> np.ndarray | None:
        seed = None
        coeff = self._running_state_coeff
        if index == self.n_steps:
            coeff += self._final_state_coeff
        if coeff != 0.0:
            o = column_overlaps(states, self.spec.target_states)
            seed = self.spec.target_states * (coeff * o)[None, :]
        if self._forbidden_coeff != 0.0:
            f = column_overlaps(states, self.spec.forbidden_states)
            extra = self.spec.forbidden_states * (self._forbidden_coeff * f)[None, :]
            seed = extra if seed is None else seed + extra
        return seed

    def control_seed(self, values: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(values)
        if self.spec.w_energy > 0:
            grad += (2.0 * self.spec.w_energy) * values
        if self.spec.w_smoothness > 0:
            d = np.diff(values, axis=1)
            grad[:, 1:] += (2.0 * self.spec.w_smoothness) * d
            grad[:, :-1] -= (2.0 * self.spec.w_smoothness) * d
        return grad
