"""GRAPE pulse optimization with memory-aware adjoint strategies.

The engine propagates time-stepped unitary dynamics forward, differentiates
the weighted control cost in reverse mode, and lets the caller pick how the
reverse sweep obtains intermediate values: full taping, periodic
checkpointing with recomputation, unitary reversibility (nothing stored),
or reversibility reset at checkpoints.  A memory ledger counts every object
the engine retains so the storage behavior of each strategy is directly
testable.
"""

from .backend import ACTIVE_BACKEND
from .cost import (
    CostReport,
    CostSpec,
    control_energy,
    control_smoothness,
    final_state_infidelity,
    forbidden_occupation,
    gate_infidelity,
    running_gate_infidelity,
    running_state_infidelity,
    total_cost,
)
from .errors import ContractViolation, NumericsError
from .evolution import EvolutionState, RecordMode, TrajectoryRecord, evolve_forward, evolve_step
from .gradient import (
    GradientResult,
    evaluate,
    finite_difference_gradient,
    gradient,
    reverse_reconstruct,
    step_vjp,
)
from .linalg import (
    dagger,
    expm,
    expm_frechet,
    expm_vjp,
    frobenius_inner,
    frobenius_norm,
    matmul,
    trace,
)
from .memtrace import (
    MemoryLedger,
    checkpoint_memory_model,
    expected_peak,
    optimal_checkpoint_period,
)
from .model import (
    ControlGrid,
    HamiltonianModel,
    TimeGrid,
    assemble_hamiltonian,
    interpolate_controls,
    step_unitary,
)
from .optimizer import GrapeConfig, OptimizationTrace, grape, initial_controls
from .strategy import Strategy, StrategyKind

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "ContractViolation",
    "ControlGrid",
    "CostReport",
    "CostSpec",
    "EvolutionState",
    "GradientResult",
    "GrapeConfig",
    "HamiltonianModel",
    "MemoryLedger",
    "NumericsError",
    "OptimizationTrace",
    "RecordMode",
    "Strategy",
    "StrategyKind",
    "TimeGrid",
    "TrajectoryRecord",
    "assemble_hamiltonian",
    "checkpoint_memory_model",
    "control_energy",
    "control_smoothness",
    "dagger",
    "evaluate",
    "evolve_forward",
    "evolve_step",
    "expected_peak",
    "expm",
    "expm_frechet",
    "expm_vjp",
    "final_state_infidelity",
    "finite_difference_gradient",
    "forbidden_occupation",
    "frobenius_inner",
    "frobenius_norm",
    "gate_infidelity",
    "gradient",
    "grape",
    "initial_controls",
    "interpolate_controls",
    "matmul",
    "optimal_checkpoint_period",
    "reverse_reconstruct",
    "running_gate_infidelity",
    "running_state_infidelity",
    "step_unitary",
    "step_vjp",
    "total_cost",
    "trace",
]
