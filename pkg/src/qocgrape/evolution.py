"""Forward propagation across the time grid with strategy-controlled recording."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import linalg
from .errors import ContractViolation
from .memtrace import KIND_PROPAGATOR, KIND_STATES, KIND_UNITARY, MemoryLedger
from .model import ControlGrid, HamiltonianModel, TimeGrid, step_unitary


class RecordMode(Enum):
    NONE = "none"
    CHECKPOINTS = "checkpoints"
    ALL = "all"


@dataclass
class EvolutionState:
    """Cumulative propagator and (optionally) the evolving state block."""

    step: int
    k_mat: np.ndarray
    states: np.ndarray | None = None

    @classmethod
    def initial(cls, dim: int, psi0: np.ndarray | None = None) -> "EvolutionState":
        states = None if psi0 is None else linalg.as_state_block(psi0)
        return cls(step=0, k_mat=linalg.identity(dim), states=states)


class TrajectoryRecord:
    """Retained per-step objects, with every store/free mirrored in a ledger."""

    def __init__(
        self,
        mode: RecordMode = RecordMode.NONE,
        period: int | None = None,
        ledger: MemoryLedger | None = None,
    ) -> None:
        if mode is RecordMode.CHECKPOINTS and (period is None or period < 1):
            raise ContractViolation("checkpoint recording needs a period >= 1")
        self.mode = mode
        self.period = period
        self.ledger = ledger if ledger is not None else MemoryLedger()
        self.stored_u: dict[int, np.ndarray] = {}
        self.stored_k: dict[int, np.ndarray] = {}
        self.stored_states: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.stored_u) + len(self.stored_k) + len(self.stored_states)

    def store_u(self, step: int, arr: np.ndarray) -> None:
        self.stored_u[step] = arr
        self.ledger.record_store(KIND_UNITARY, arr.shape)

    def store_k(self, index: int, arr: np.ndarray) -> None:
        self.stored_k[index] = arr
        self.ledger.record_store(KIND_PROPAGATOR, arr.shape)

    def store_states(self, index: int, arr: np.ndarray) -> None:
        self.stored_states[index] = arr
        self.ledger.record_store(KIND_STATES, arr.shape)

    def pop_u(self, step: int) -> np.ndarray:
        arr = self.stored_u.pop(step)
        self.ledger.record_free(KIND_UNITARY, arr.shape)
        return arr

    def pop_k(self, index: int) -> np.ndarray:
        arr = self.stored_k.pop(index)
        self.ledger.record_free(KIND_PROPAGATOR, arr.shape)
        return arr

    def pop_states(self, index: int) -> np.ndarray:
        arr = self.stored_states.pop(index)
        self.ledger.record_free(KIND_STATES, arr.shape)
        return arr

    def record_step(self, index: int, u_mat: np.ndarray, state: EvolutionState) -> None:
        """Retain the objects the active mode prescribes for state ``index``."""
        if self.mode is RecordMode.ALL:
            self.store_u(index - 1, u_mat)
            self.store_k(index, state.k_mat)
            if state.states is not None:
                self.store_states(index, state.states)
        elif self.mode is RecordMode.CHECKPOINTS and index % self.period == 0:
            self.store_k(index, state.k_mat)
            if state.states is not None:
                self.store_states(index, state.states)


def advance(state: EvolutionState, u_mat: np.ndarray) -> EvolutionState:
    """Apply one step unitary to the propagator and states."""
    states = None if state.states is None else u_mat @ state.states
    return EvolutionState(step=state.step + 1, k_mat=u_mat @ state.k_mat, states=states)


def evolve_step(
    state: EvolutionState,
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
) -> EvolutionState:
    if state.step >= grid.n_steps:
        raise ContractViolation(f"step {state.step} out of range [0, {grid.n_steps})")
    return advance(state, step_unitary(model, grid, controls, state.step))


def evolve_forward(
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
    psi0: np.ndarray | None = None,
    recorder: TrajectoryRecord | None = None,
    observer: Callable[[int, EvolutionState], None] | None = None,
) -> EvolutionState:
    """Propagate from step 0 to N, recording per the recorder's mode.

    ``observer(index, state)`` is invoked after each step, which lets cost
    accumulation run alongside the sweep without retaining the trajectory.
    """
    if recorder is not None and len(recorder) > 0:
        raise ContractViolation("recorder must be empty at the start of a forward sweep")
    state = EvolutionState.initial(model.dim, psi0)
    for j in range(grid.n_steps):
        u_mat = step_unitary(model, grid, controls, j)
        state = advance(state, u_mat)
        if recorder is not None:
            recorder.record_step(j + 1, u_mat, state)
        if observer is not None:
            observer(j + 1, state)
    return state
