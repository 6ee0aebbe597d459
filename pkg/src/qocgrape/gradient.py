"""Reverse-mode gradient of the weighted cost under four adjoint-memory strategies.

The forward sweep propagates the cumulative propagator (and state block when
a state-dependent term is active) while retaining whatever the strategy
prescribes.  The reverse sweep pulls cost adjoints back step by step: matmul
adjoints recover the step unitary's cotangent, the exponential adjoint maps
it to the step generator, and projecting onto each control operator yields
the two bracketing knot contributions.  Pre-step values come from the tape
(store-all), from recomputation out of checkpoints, or from inverting the
unitary with its conjugate transpose (reversibility), which needs nothing
stored but accrues roundoff along the reverse sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .cost import CostAccumulator, CostReport, CostSeeder, CostSpec, total_cost
from .errors import ContractViolation, NumericsError
from .evolution import EvolutionState, RecordMode, TrajectoryRecord, evolve_forward
from .kernels import expm_frechet_kernel, expm_kernel
from .memtrace import MemoryLedger
from .model import ControlGrid, HamiltonianModel, TimeGrid, knot_bracket, step_midpoint
from .strategy import Strategy, StrategyKind

__all__ = [
    "GradientResult",
    "Strategy",
    "StrategyKind",
    "evaluate",
    "finite_difference_gradient",
    "gradient",
    "reverse_reconstruct",
    "step_vjp",
]


@dataclass
class GradientResult:
    """Gradient w.r.t. every control knot plus run diagnostics."""

    grad: np.ndarray
    cost: CostReport
    ledger: MemoryLedger
    reconstruction_error: float = 0.0


def _step_operator(
    model: HamiltonianModel, grid: TimeGrid, controls: ControlGrid, j: int
) -> tuple[np.ndarray, int, float]:
    """Step generator ``-i dt H`` plus the bracketing-knot stencil."""
    t_mid = step_midpoint(grid, j)
    index, alpha = knot_bracket(t_mid, controls.knot_times)
    u_mid = (1.0 - alpha) * controls.values[:, index - 1] + alpha * controls.values[:, index]
    ham = model.h0 + np.tensordot(u_mid, model.control_stack, axes=1)
    return (-1j * grid.dt) * ham, index, alpha


def step_vjp(
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
    j: int,
    kbar_next: np.ndarray,
    psibar_next: np.ndarray | None,
    k_prev: np.ndarray,
    psi_prev: np.ndarray | None,
    grad_out: np.ndarray,
    u_mat: np.ndarray | None = None,
    generator: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Pull adjoints of the post-step values back through step ``j``.

    Accumulates the control contributions into the two bracketing knot
    columns of ``grad_out`` and returns the pre-step adjoints.  ``u_mat``
    and ``generator`` may be supplied when the caller already computed them
    (tape or reversibility paths); otherwise both are recomputed from the
    controls.
    """
    if generator is None:
        generator, index, alpha = _step_operator(model, grid, controls, j)
    else:
        index, alpha = knot_bracket(step_midpoint(grid, j), controls.knot_times)
    if u_mat is None:
        u_mat = expm_kernel(np.ascontiguousarray(generator))
    u_dag = u_mat.conj().T

    ubar = kbar_next @ k_prev.conj().T
    kbar = u_dag @ kbar_next
    psibar = None
    if psibar_next is not None:
        if psi_prev is None:
            raise ContractViolation(f"state values at step {j} are required but missing")
        ubar = ubar + psibar_next @ psi_prev.conj().T
        psibar = u_dag @ psibar_next

    genbar = expm_frechet_kernel(np.ascontiguousarray(generator.conj().T), ubar)
    hbar = (1j * grid.dt) * genbar
    channel_grads = np.real(np.einsum("ij,kij->k", np.conj(hbar), model.control_stack))
    grad_out[:, index - 1] += (1.0 - alpha) * channel_grads
    grad_out[:, index] += alpha * channel_grads
    return kbar, psibar


def reverse_reconstruct(
    u_mat: np.ndarray, k_mat: np.ndarray, states: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Previous-step propagator/states from the unitary's conjugate transpose."""
    u_dag = u_mat.conj().T
    k_prev = u_dag @ k_mat
    psi_prev = None if states is None else u_dag @ states
    return k_prev, psi_prev


def _add_seeds(
    kbar: np.ndarray,
    psibar: np.ndarray | None,
    seeder: CostSeeder,
    k_val: np.ndarray,
    psi_val: np.ndarray | None,
    index: int,
) -> None:
    seed = seeder.propagator_seed(k_val, index)
    if seed is not None:
        kbar += seed
    if psibar is not None:
        seed = seeder.state_seed(psi_val, index)
        if seed is not None:
            psibar += seed


def _segment_bounds(n_steps: int, period: int) -> list[int]:
    bounds = [i * period for i in range(n_steps // period + 1)]
    if bounds[-1] != n_steps:
        bounds.append(n_steps)
    return bounds


def _reverse_store_all(
    model, grid, controls, recorder, seeder, psi_start, kbar, psibar, grad
) -> float:
    track_states = psibar is not None
    ident = linalg.identity(model.dim)
    # The taped final values duplicate the live ones the seeds already used.
    recorder.pop_k(grid.n_steps)
    if track_states:
        recorder.pop_states(grid.n_steps)
    for j in range(grid.n_steps - 1, -1, -1):
        u_mat = recorder.pop_u(j)
        if j > 0:
            k_prev = recorder.pop_k(j)
            psi_prev = recorder.pop_states(j) if track_states else None
        else:
            k_prev, psi_prev = ident, psi_start
        kbar, psibar = step_vjp(
            model, grid, controls, j, kbar, psibar, k_prev, psi_prev, grad, u_mat=u_mat
        )
        if j >= 1:
            _add_seeds(kbar, psibar, seeder, k_prev, psi_prev, j)
    return 0.0


def _reverse_checkpoint(
    model, grid, controls, strategy, recorder, seeder, psi_start, kbar, psibar, grad
) -> float:
    n = grid.n_steps
    track_states = psibar is not None
    ident = linalg.identity(model.dim)
    bounds = _segment_bounds(n, strategy.period)
    # A checkpoint at step N duplicates the live final values; drop it up front.
    if n in recorder.stored_k:
        recorder.pop_k(n)
        if n in recorder.stored_states:
            recorder.pop_states(n)
    tape = TrajectoryRecord(ledger=recorder.ledger)
    for seg in range(len(bounds) - 2, -1, -1):
        p, q = bounds[seg], bounds[seg + 1]
        if p == 0:
            k_cur, psi_cur = ident, psi_start
        else:
            k_cur = recorder.stored_k[p]
            psi_cur = recorder.stored_states[p] if track_states else None
        # Recompute the segment, taping pre-step values; the boundary values
        # at p are the checkpoint itself and are not re-recorded.
        for j in range(p, q):
            u_mat = expm_kernel(np.ascontiguousarray(_step_operator(model, grid, controls, j)[0]))
            tape.store_u(j, u_mat)
            if j > p:
                tape.store_k(j, k_cur)
                if track_states:
                    tape.store_states(j, psi_cur)
            if j < q - 1:
                k_cur = u_mat @ k_cur
                if track_states:
                    psi_cur = u_mat @ psi_cur
        for j in range(q - 1, p - 1, -1):
            u_mat = tape.pop_u(j)
            if j > p:
                k_prev = tape.pop_k(j)
                psi_prev = tape.pop_states(j) if track_states else None
            elif p == 0:
                k_prev, psi_prev = ident, psi_start
            else:
                k_prev = recorder.stored_k[p]
                psi_prev = recorder.stored_states[p] if track_states else None
            kbar, psibar = step_vjp(
                model, grid, controls, j, kbar, psibar, k_prev, psi_prev, grad, u_mat=u_mat
            )
            if j >= 1:
                _add_seeds(kbar, psibar, seeder, k_prev, psi_prev, j)
        if p > 0:
            recorder.pop_k(p)
            if track_states:
                recorder.pop_states(p)
    return 0.0


def _reverse_revert(
    model, grid, controls, final, seeder, psi_start, kbar, psibar, grad
) -> float:
    track_states = psibar is not None
    k_cur, psi_cur = final.k_mat, final.states
    for j in range(grid.n_steps - 1, -1, -1):
        generator, _, _ = _step_operator(model, grid, controls, j)
        u_mat = expm_kernel(np.ascontiguousarray(generator))
        k_prev, psi_prev = reverse_reconstruct(u_mat, k_cur, psi_cur)
        kbar, psibar = step_vjp(
            model,
            grid,
            controls,
            j,
            kbar,
            psibar,
            k_prev,
            psi_prev,
            grad,
            u_mat=u_mat,
            generator=generator,
        )
        if j >= 1:
            _add_seeds(kbar, psibar, seeder, k_prev, psi_prev, j)
        k_cur, psi_cur = k_prev, psi_prev
    # The reconstruction error is largest at step 0, where the known exact
    # initial propagator provides a storage-free reference.
    return linalg.frobenius_norm(k_cur - linalg.identity(model.dim))


def _reverse_revert_checkpoint(
    model, grid, controls, strategy, recorder, final, seeder, psi_start, kbar, psibar, grad
) -> float:
    n = grid.n_steps
    track_states = psibar is not None
    ident = linalg.identity(model.dim)
    bounds = _segment_bounds(n, strategy.period)
    max_err = 0.0
    k_cur, psi_cur = final.k_mat, final.states
    for seg in range(len(bounds) - 2, -1, -1):
        p, q = bounds[seg], bounds[seg + 1]
        if q in recorder.stored_k:
            # Reset to the stored forward values so roundoff accrues over at
            # most one period.
            k_cur = recorder.pop_k(q)
            psi_cur = recorder.pop_states(q) if track_states else None
        for j in range(q - 1, p - 1, -1):
            generator, _, _ = _step_operator(model, grid, controls, j)
            u_mat = expm_kernel(np.ascontiguousarray(generator))
            k_prev, psi_prev = reverse_reconstruct(u_mat, k_cur, psi_cur)
            kbar, psibar = step_vjp(
                model,
                grid,
                controls,
                j,
                kbar,
                psibar,
                k_prev,
                psi_prev,
                grad,
                u_mat=u_mat,
                generator=generator,
            )
            if j >= 1:
                _add_seeds(kbar, psibar, seeder, k_prev, psi_prev, j)
            k_cur, psi_cur = k_prev, psi_prev
        reference = ident if p == 0 else recorder.stored_k[p]
        max_err = max(max_err, linalg.frobenius_norm(k_cur - reference))
    return max_err


def _record_mode(strategy: Strategy) -> RecordMode:
    if strategy.kind == StrategyKind.STORE_ALL:
        return RecordMode.ALL
    if strategy.kind.uses_checkpoints:
        return RecordMode.CHECKPOINTS
    return RecordMode.NONE


def gradient(
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
    cost_spec: CostSpec,
    psi0: np.ndarray | None = None,
    strategy: Strategy | None = None,
) -> GradientResult:
    """Gradient of the weighted cost w.r.t. every control knot."""
    if strategy is None:
        strategy = Strategy.store_all()
    strategy.validate_for(grid.n_steps)
    if controls.n_controls != model.n_controls:
        raise ContractViolation(
            f"{controls.n_controls} control rows for {model.n_controls} control operators"
        )
    if controls.n_knots != grid.n_steps + 1:
        raise ContractViolation(
            f"{controls.n_knots} knot columns for a {grid.n_steps}-step grid"
        )
    if cost_spec.needs_states and psi0 is None:
        raise ContractViolation("state-dependent cost terms need initial states")
    psi_start = linalg.as_state_block(psi0) if (psi0 is not None and cost_spec.needs_states) else None
    if psi_start is not None and psi_start.shape[0] != model.dim:
        raise ContractViolation(
            f"initial states have dim {psi_start.shape[0]}, model dim {model.dim}"
        )

    ledger = MemoryLedger()
    needs_sweep = cost_spec.needs_reverse_sweep
    mode = _record_mode(strategy) if needs_sweep else RecordMode.NONE
    recorder = TrajectoryRecord(mode, strategy.period, ledger)
    accumulator = CostAccumulator(cost_spec)
    final = evolve_forward(
        model, grid, controls, psi_start, recorder, observer=accumulator.observe
    )
    report = total_cost(cost_spec, accumulator.summary(final), controls.values)

    seeder = CostSeeder(cost_spec, grid.n_steps)
    grad = seeder.control_seed(controls.values)
    recon_err = 0.0
    if needs_sweep:
        kbar = np.zeros_like(final.k_mat)
        seed = seeder.propagator_seed(final.k_mat, grid.n_steps)
        if seed is not None:
            kbar += seed
        psibar = None
        if psi_start is not None:
            psibar = np.zeros_like(final.states)
            seed = seeder.state_seed(final.states, grid.n_steps)
            if seed is not None:
                psibar += seed

        if strategy.kind == StrategyKind.STORE_ALL:
            recon_err = _reverse_store_all(
                model, grid, controls, recorder, seeder, psi_start, kbar, psibar, grad
            )
        elif strategy.kind == StrategyKind.CHECKPOINT:
            recon_err = _reverse_checkpoint(
                model, grid, controls, strategy, recorder, seeder, psi_start, kbar, psibar, grad
            )
        elif strategy.kind == StrategyKind.REVERT:
            recon_err = _reverse_revert(
                model, grid, controls, final, seeder, psi_start, kbar, psibar, grad
            )
        else:
            recon_err = _reverse_revert_checkpoint(
                model, grid, controls, strategy, recorder, final, seeder, psi_start, kbar, psibar, grad
            )

    if not np.all(np.isfinite(grad)) or not np.isfinite(report.total):
        raise NumericsError("gradient evaluation produced non-finite values")
    return GradientResult(grad=grad, cost=report, ledger=ledger, reconstruction_error=recon_err)


def evaluate(
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
    cost_spec: CostSpec,
    psi0: np.ndarray | None = None,
    include_inactive: bool = False,
) -> tuple[EvolutionState, CostReport]:
    """Forward-only evaluation: final state plus the cost report."""
    psi_start = linalg.as_state_block(psi0) if psi0 is not None else None
    accumulator = CostAccumulator(cost_spec, include_inactive=include_inactive)
    final = evolve_forward(model, grid, controls, psi_start, observer=accumulator.observe)
    report = total_cost(
        cost_spec, accumulator.summary(final), controls.values, include_inactive=include_inactive
    )
    return final, report


def finite_difference_gradient(
    model: HamiltonianModel,
    grid: TimeGrid,
    controls: ControlGrid,
    cost_spec: CostSpec,
    psi0: np.ndarray | None = None,
    h: float = 1e-6,
) -> np.ndarray:
    """Central finite differences of the total cost over every control knot.

    Differentiates the forward (primal) evaluation only, which makes it an
    oracle for the reverse-mode path.
    """
    base = controls.values
    grad = np.zeros_like(base)
    for k in range(base.shape[0]):
        for j in range(base.shape[1]):
            bumped = base.copy()
            bumped[k, j] = base[k, j] + h
            _, up = evaluate(model, grid, ControlGrid(bumped, controls.knot_times), cost_spec, psi0)
            bumped[k, j] = base[k, j] - h
            _, down = evaluate(model, grid, ControlGrid(bumped, controls.knot_times), cost_spec, psi0)
            grad[k, j] = (up.total - down.total) / (2.0 * h)
    return grad
