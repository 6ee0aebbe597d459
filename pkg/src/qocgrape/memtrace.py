"""Ledger of engine-retained matrices, with closed-form peak predictions.

The ledger counts whole objects retained by the gradient engine (tape
entries and checkpoints), not allocator-level bytes; per-step transients
(the current unitary, Hamiltonian, exponential workspace) are deliberately
excluded so the counts are comparable to the closed-form model in
:func:`expected_peak`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractViolation
from .strategy import StrategyKind

KIND_UNITARY = "unitary"
KIND_PROPAGATOR = "propagator"
KIND_STATES = "states"
KINDS = (KIND_UNITARY, KIND_PROPAGATOR, KIND_STATES)

BYTES_PER_ENTRY = 16  # one complex128


def object_bytes(shape: tuple[int, ...]) -> int:
    count = 1
    for extent in shape:
        count *= int(extent)
    return BYTES_PER_ENTRY * count


class MemoryLedger:
    """Running live/peak counters per object kind, plus byte totals."""

    def __init__(self) -> None:
        self._live = {kind: 0 for kind in KINDS}
        self._peak = {kind: 0 for kind in KINDS}
        self.live_bytes = 0
        self.peak_bytes = 0

    def record_store(self, kind: str, shape: tuple[int, ...]) -> None:
        if kind not in KINDS:
            raise ContractViolation(f"unknown object kind {kind!r}")
        self._live[kind] += 1
        if self._live[kind] > self._peak[kind]:
            self._peak[kind] = self._live[kind]
        self.live_bytes += object_bytes(shape)
        if self.live_bytes > self.peak_bytes:
            self.peak_bytes = self.live_bytes

    def record_free(self, kind: str, shape: tuple[int, ...]) -> None:
        if kind not in KINDS:
            raise ContractViolation(f"unknown object kind {kind!r}")
        if self._live[kind] == 0:
            raise ContractViolation(f"free without matching store for kind {kind!r}")
        self._live[kind] -= 1
        self.live_bytes -= object_bytes(shape)

    @property
    def live_counts(self) -> dict[str, int]:
        return dict(self._live)

    @property
    def peak_counts(self) -> dict[str, int]:
        return dict(self._peak)


@dataclass(frozen=True)
class PeakPrediction:
    """Closed-form peak object counts per kind and the resulting bytes."""

    counts: dict[str, int]
    n_bytes: int

    @property
    def total_objects(self) -> int:
        return sum(self.counts.values())


def expected_peak(
    kind: StrategyKind,
    n_steps: int,
    period: int | None = None,
    dim: int = 2,
    n_states: int = 0,
) -> PeakPrediction:
    """Predicted peak counts of additionally retained objects.

    Store-all retains one unitary, propagator, and state block per step.
    Periodic checkpointing retains ``N/C`` propagator/state checkpoints plus
    a ``C``-long segment tape of all three kinds during the reverse sweep.
    Full reversibility retains nothing.  Reversibility over checkpoints
    retains the ``N/C`` checkpoints only.  ``n_states == 0`` means states
    are not propagated and their counts are zero.
    """
    if kind.uses_checkpoints:
        if period is None or period < 1 or period > n_steps:
            raise ContractViolation(f"{kind.value} needs 1 <= period <= n_steps")
        n_checkpoints = n_steps // period

    if kind == StrategyKind.STORE_ALL:
        counts = {KIND_UNITARY: n_steps, KIND_PROPAGATOR: n_steps, KIND_STATES: n_steps}
    elif kind == StrategyKind.CHECKPOINT:
        retained = n_checkpoints + period
        counts = {KIND_UNITARY: period, KIND_PROPAGATOR: retained, KIND_STATES: retained}
    elif kind == StrategyKind.REVERT:
        counts = {KIND_UNITARY: 0, KIND_PROPAGATOR: 0, KIND_STATES: 0}
    else:  # REVERT_CHECKPOINT
        counts = {KIND_UNITARY: 0, KIND_PROPAGATOR: n_checkpoints, KIND_STATES: n_checkpoints}

    if n_states == 0:
        counts[KIND_STATES] = 0
    n_bytes = BYTES_PER_ENTRY * (
        dim * dim * (counts[KIND_UNITARY] + counts[KIND_PROPAGATOR])
        + dim * n_states * counts[KIND_STATES]
    )
    return PeakPrediction(counts=counts, n_bytes=n_bytes)


def checkpoint_memory_model(n_steps: int, period: float) -> float:
    """The ``N/C + C`` count of retained square matrices under checkpointing."""
    return n_steps / period + period


def optimal_checkpoint_period(n_steps: int) -> int:
    """Integer period minimizing :func:`checkpoint_memory_model`."""
    return int(round(math.sqrt(n_steps)))
