"""Controllable Hamiltonian, uniform time grid, and piecewise-linear controls.

The Hamiltonian at a time inside step ``j`` is the drift plus the control
operators weighted by the control amplitudes interpolated at the step
midpoint.  The step unitary is the exponential of ``-i * dt * H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ContractViolation
from .kernels import expm_kernel


@dataclass
class HamiltonianModel:
    """Drift operator plus a list of Hermitian control operators."""

    h0: np.ndarray
    control_ops: list[np.ndarray]
    control_stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.h0 = linalg.as_complex_matrix(self.h0)
        if not linalg.is_hermitian(self.h0):
            raise ContractViolation("drift Hamiltonian must be Hermitian")
        if len(self.control_ops) < 1:
            raise ContractViolation("at least one control operator is required")
        ops = []
        for k, op in enumerate(self.control_ops):
            mat = linalg.as_complex_matrix(op)
            if mat.shape != self.h0.shape:
                raise ContractViolation(
                    f"control operator {k} has shape {mat.shape}, expected {self.h0.shape}"
                )
            if not linalg.is_hermitian(mat):
                raise ContractViolation(f"control operator {k} must be Hermitian")
            ops.append(mat)
        self.control_ops = ops
        self.control_stack = np.stack(ops)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.control_ops)


@dataclass
class TimeGrid:
    """Uniformly spaced knot times ``t_0 < t_1 < ... < t_N``."""

    n_steps: int
    dt: float
    knot_times: np.ndarray

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ContractViolation("need at least one time step")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ContractViolation("dt must be positive and finite")
        times = np.ascontiguousarray(self.knot_times, dtype=np.float64)
        if times.shape != (self.n_steps + 1,):
            raise ContractViolation(
                f"expected {self.n_steps + 1} knot times, got shape {times.shape}"
            )
        spacing = np.diff(times)
        if np.any(spacing <= 0):
            raise ContractViolation("knot times must be strictly increasing")
        if np.max(np.abs(spacing - self.dt)) > 1e-9 * self.dt:
            raise ContractViolation("non-uniform time grids are not supported")
        self.knot_times = times

    @classmethod
    def uniform(cls, n_steps: int, dt: float) -> "TimeGrid":
        return cls(n_steps, dt, np.arange(n_steps + 1, dtype=np.float64) * dt)

    @property
    def duration(self) -> float:
        return float(self.knot_times[-1] - self.knot_times[0])


@dataclass
class ControlGrid:
    """Real control amplitudes at the knots, one row per control channel."""

    values: np.ndarray
    knot_times: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            raise ContractViolation("control amplitudes must be real")
        vals = np.ascontiguousarray(vals, dtype=np.float64)
        if vals.ndim != 2:
            raise ContractViolation(f"expected (channels, knots) values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ContractViolation("control amplitudes must be finite")
        times = np.ascontiguousarray(self.knot_times, dtype=np.float64)
        if vals.shape[1] != times.shape[0]:
            raise ContractViolation(
                f"{vals.shape[1]} knot columns but {times.shape[0]} knot times"
            )
        self.values = vals
        self.knot_times = times

    @property
    def n_controls(self) -> int:
        return self.values.shape[0]

    @property
    def n_knots(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "ControlGrid":
        return ControlGrid(self.values.copy(), self.knot_times)


def knot_bracket(t: float, knot_times: np.ndarray) -> tuple[int, float]:
    """Bracketing knot index and interpolation weight for time ``t``.

    Returns ``(index, alpha)`` with ``index`` the smallest i >= 1 such that
    ``t <= knot_times[i]`` (ties at a knot resolve to that knot's left
    interval), and ``alpha`` the weight of the right knot.
    """
    if t < knot_times[0] or t > knot_times[-1]:
        raise ContractViolation(
            f"time {t} outside knot range [{knot_times[0]}, {knot_times[-1]}]"
        )
    index = int(np.searchsorted(knot_times, t, side="left"))
    if index == 0:
        index = 1
    alpha = (t - knot_times[index - 1]) / (knot_times[index] - knot_times[index - 1])
    return index, float(alpha)


def interpolate_controls(t: float, grid: ControlGrid) -> np.ndarray:
    """Piecewise-linear control amplitudes at time ``t``."""
    index, alpha = knot_bracket(t, grid.knot_times)
    return (1.0 - alpha) * grid.values[:, index - 1] + alpha * grid.values[:, index]


def assemble_hamiltonian(model: HamiltonianModel, u: np.ndarray) -> np.ndarray:
    """Drift plus amplitude-weighted control operators."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (model.n_controls,):
        raise ContractViolation(
            f"expected {model.n_controls} control amplitudes, got shape {u.shape}"
        )
    return model.h0 + np.tensordot(u, model.control_stack, axes=1)


def step_midpoint(grid: TimeGrid, j: int) -> float:
    if not 0 <= j < grid.n_steps:
        raise ContractViolation(f"step index {j} out of range [0, {grid.n_steps})")
    return float(grid.knot_times[j] + 0.5 * grid.dt)


def step_generator(
    model: HamiltonianModel, grid: TimeGrid, controls: ControlGrid, j: int
) -> np.ndarray:
    """``-i * dt * H`` with the controls evaluated at the step midpoint."""
    u_mid = interpolate_controls(step_midpoint(grid, j), controls)
    return (-1j * grid.dt) * assemble_hamiltonian(model, u_mid)


def step_unitary(
    model: HamiltonianModel, grid: TimeGrid, controls: ControlGrid, j: int
) -> np.ndarray:
    return expm_kernel(np.ascontiguousarray(step_generator(model, grid, controls, j)))
