"""Fixed-step gradient-descent loop over the control knots.

Each iteration evaluates the cost and its gradient under the configured
adjoint-memory strategy and steps the controls downhill.  Optimization
stops when the gate infidelity reaches the configured threshold or the
iteration cap is hit; the best-seen controls (by total cost) are returned
so a final uphill step never leaks into the result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cost import CostSpec
from .errors import ContractViolation
from .gradient import gradient
from .model import ControlGrid, HamiltonianModel, TimeGrid
from .strategy import Strategy


@dataclass
class GrapeConfig:
    step_size: float
    max_iters: int
    fidelity_threshold: float
    strategy: Strategy
    seed: int = 0
    init_amplitude: float = 0.1
    backtrack: bool = False
    max_backtracks: int = 20

    def __post_init__(self) -> None:
        if not (np.isfinite(self.step_size) and self.step_size >= 0):
            raise ContractViolation("step size must be finite and >= 0")
        if self.max_iters < 0:
            raise ContractViolation("max_iters must be >= 0")
        if not (0 <= self.fidelity_threshold < 1):
            raise ContractViolation("fidelity threshold must lie in [0, 1)")
        if not (np.isfinite(self.init_amplitude) and self.init_amplitude >= 0):
            raise ContractViolation("initial amplitude must be finite and >= 0")


@dataclass
class IterationRecord:
    iteration: int
    total_cost: float
    gate_infidelity: float
    grad_inf_norm: float
    wall_time_s: float


@dataclass
class OptimizationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    CSV_COLUMNS = (
        "iteration",
        "total_cost",
        "gate_infidelity",
        "grad_inf_norm",
        "wall_time_s",
    )

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def as_csv_rows(self) -> list[dict]:
        return [
            {name: repr(getattr(rec, name)) for name in self.CSV_COLUMNS}
            for rec in self.records
        ]


def initial_controls(
    model: HamiltonianModel, grid: TimeGrid, amplitude: float, seed: int
) -> ControlGrid:
    """Uniform random knot amplitudes in [-amplitude, amplitude]."""
    rng = np.random.default_rng(seed)
    values = rng.uniform(
        -amplitude, amplitude, size=(model.n_controls, grid.n_steps + 1)
    )
    return ControlGrid(values, grid.knot_times)


def grape(
    model: HamiltonianModel,
    grid: TimeGrid,
    cost_spec: CostSpec,
    config: GrapeConfig,
    psi0: np.ndarray | None = None,
    initial: ControlGrid | None = None,
    on_iteration: Callable[[IterationRecord], None] | None = None,
) -> tuple[ControlGrid, OptimizationTrace]:
    """Iterate gradient evaluation and control updates.

    ``on_iteration`` is invoked with each record as it completes, which lets
    callers stream the trace.
    """
    if initial is not None:
        controls = initial.copy()
    else:
        controls = initial_controls(model, grid, config.init_amplitude, config.seed)
    trace = OptimizationTrace()
    eps = config.step_size
    halvings = 0
    best_values = controls.values.copy()
    best_cost = np.inf
    prev_cost = np.inf

    for it in range(config.max_iters):
        t0 = time.perf_counter()
        result = gradient(model, grid, controls, cost_spec, psi0, config.strategy)
        elapsed = time.perf_counter() - t0
        total = result.cost.total
        record = IterationRecord(
            iteration=it,
            total_cost=total,
            gate_infidelity=result.cost.gate_infidelity,
            grad_inf_norm=float(np.max(np.abs(result.grad))),
            wall_time_s=elapsed,
        )
        trace.append(record)
        if on_iteration is not None:
            on_iteration(record)
        if total < best_cost:
            best_cost = total
            best_values = controls.values.copy()
        if (
            cost_spec.target_gate is not None
            and result.cost.gate_infidelity <= config.fidelity_threshold
        ):
            trace.converged = True
            break
        if (
            config.backtrack
            and total > prev_cost
            and halvings < config.max_backtracks
        ):
            # Cost went up: halve the step and restart from the best point.
            eps *= 0.5
            halvings += 1
            controls = ControlGrid(best_values.copy(), controls.knot_times)
            prev_cost = best_cost
            continue
        prev_cost = total
        controls = ControlGrid(controls.values - eps * result.grad, controls.knot_times)

    return ControlGrid(best_values, controls.knot_times), trace
