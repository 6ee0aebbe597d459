"""JSON run configuration: operator expressions, grids, costs, strategies.

Operators are written as nested expressions over named 2x2 primitives so a
q-qubit model never spells out a ``2^q`` matrix:

* a string names a primitive: ``pauli_x``, ``pauli_y``, ``pauli_z``,
  ``identity``, ``zero``, ``number``, ``lower``, ``raise``
* ``{"kron": [a, b, ...]}`` is the Kronecker product
* ``{"sum": [a, b, ...]}`` adds operators of equal dimension
* ``{"scale": c, "of": a}`` scales by a number (``c`` or ``[re, im]``)
* ``{"matrix": [[...], ...]}`` gives explicit entries

State blocks are ``{"basis": k}`` (a computational basis column) or
``{"columns": [[...], ...]}`` with optional ``"normalize": true``.

Unknown keys anywhere in the file are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cost import CostSpec, WEIGHT_NAMES
from ..errors import ContractViolation
from ..linalg import STATE_NORM_TOL
from ..memtrace import optimal_checkpoint_period
from ..model import HamiltonianModel, TimeGrid
from ..optimizer import GrapeConfig
from ..strategy import Strategy, StrategyKind


class ConfigError(ValueError):
    """The configuration file is malformed or internally inconsistent."""


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

BASE_OPERATORS = {
    "identity": np.eye(2, dtype=np.complex128),
    "zero": np.zeros((2, 2), dtype=np.complex128),
    "pauli_x": _PAULI_X,
    "pauli_y": _PAULI_Y,
    "pauli_z": _PAULI_Z,
    "number": np.array([[0, 0], [0, 1]], dtype=np.complex128),
    "lower": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "raise": np.array([[0, 0], [1, 0]], dtype=np.complex128),
}


def _check_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {context}")


def _as_scalar(value, context: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{context}: expected a number or [re, im] pair, got {value!r}")


def build_operator(spec, context: str = "operator") -> np.ndarray:
    if isinstance(spec, str):
        if spec not in BASE_OPERATORS:
            raise ConfigError(
                f"{context}: unknown operator {spec!r}; known: {sorted(BASE_OPERATORS)}"
            )
        return BASE_OPERATORS[spec].copy()
    if not isinstance(spec, dict):
        raise ConfigError(f"{context}: expected an operator name or expression")
    if "kron" in spec:
        _check_keys(spec, {"kron"}, context)
        factors = spec["kron"]
        if not isinstance(factors, list) or not factors:
            raise ConfigError(f"{context}: 'kron' needs a non-empty list")
        out = build_operator(factors[0], f"{context}.kron[0]")
        for i, factor in enumerate(factors[1:], start=1):
            out = np.kron(out, build_operator(factor, f"{context}.kron[{i}]"))
        return out
    if "sum" in spec:
        _check_keys(spec, {"sum"}, context)
        terms = spec["sum"]
        if not isinstance(terms, list) or not terms:
            raise ConfigError(f"{context}: 'sum' needs a non-empty list")
        mats = [build_operator(t, f"{context}.sum[{i}]") for i, t in enumerate(terms)]
        if any(m.shape != mats[0].shape for m in mats):
            raise ConfigError(f"{context}: 'sum' terms have mismatched dimensions")
        return np.sum(mats, axis=0)
    if "scale" in spec:
        _check_keys(spec, {"scale", "of"}, context)
        if "of" not in spec:
            raise ConfigError(f"{context}: 'scale' needs an 'of' operand")
        factor = _as_scalar(spec["scale"], f"{context}.scale")
        return factor * build_operator(spec["of"], f"{context}.of")
    if "matrix" in spec:
        _check_keys(spec, {"matrix"}, context)
        rows = spec["matrix"]
        try:
            mat = np.array(
                [[_as_scalar(e, context) for e in row] for row in rows],
                dtype=np.complex128,
            )
        except (TypeError, ConfigError) as exc:
            raise ConfigError(f"{context}: bad matrix literal: {exc}") from exc
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigError(f"{context}: matrix must be square, got shape {mat.shape}")
        return mat
    raise ConfigError(f"{context}: expected one of kron/sum/scale/matrix, got {sorted(spec)}")


def build_states(spec, dim: int, context: str = "states") -> np.ndarray:
    if not isinstance(spec, dict):
        raise ConfigError(f"{context}: expected a state expression")
    if "basis" in spec:
        _check_keys(spec, {"basis"}, context)
        k = spec["basis"]
        if not isinstance(k, int) or not 0 <= k < dim:
            raise ConfigError(f"{context}: basis index must lie in [0, {dim})")
        col = np.zeros((dim, 1), dtype=np.complex128)
        col[k, 0] = 1.0
        return col
    if "columns" in spec:
        _check_keys(spec, {"columns", "normalize"}, context)
        cols = spec["columns"]
        if not isinstance(cols, list) or not cols:
            raise ConfigError(f"{context}: 'columns' needs a non-empty list")
        block = np.array(
            [[_as_scalar(e, context) for e in col] for col in cols],
            dtype=np.complex128,
        ).T
        if block.shape[0] != dim:
            raise ConfigError(
                f"{context}: columns have length {block.shape[0]}, model dim is {dim}"
            )
        norms = np.linalg.norm(block, axis=0)
        if spec.get("normalize", False):
            if np.any(norms == 0):
                raise ConfigError(f"{context}: cannot normalize a zero column")
            block = block / norms[None, :]
        elif np.any(np.abs(norms - 1.0) > STATE_NORM_TOL):
            raise ConfigError(
                f"{context}: columns must be normalized (or set 'normalize': true)"
            )
        return block
    raise ConfigError(f"{context}: expected 'basis' or 'columns', got {sorted(spec)}")


def _embed_single_site(op2: np.ndarray, site: int, qubits: int) -> np.ndarray:
    out = np.array([[1.0]], dtype=np.complex128)
    for i in range(qubits):
        out = np.kron(out, op2 if i == site else BASE_OPERATORS["identity"])
    return out


def zz_chain_family(qubits: int) -> tuple[HamiltonianModel, np.ndarray]:
    """Scalable built-in model: z drifts with nearest-neighbor zz coupling,
    x/y controls on the first qubit, and an x gate on that qubit as target."""
    if qubits < 1:
        raise ConfigError("'zz_chain' family needs at least one qubit")
    dim = 2**qubits
    h0 = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(qubits):
        h0 += 0.5 * _embed_single_site(_PAULI_Z, i, qubits)
    for i in range(qubits - 1):
        zz = _embed_single_site(_PAULI_Z, i, qubits) @ _embed_single_site(
            _PAULI_Z, i + 1, qubits
        )
        h0 += 0.1 * zz
    controls = [
        _embed_single_site(_PAULI_X, 0, qubits),
        _embed_single_site(_PAULI_Y, 0, qubits),
    ]
    target = _embed_single_site(_PAULI_X, 0, qubits)
    return HamiltonianModel(h0, controls), target


MODEL_FAMILIES = {"zz_chain": zz_chain_family}


@dataclass
class RunConfig:
    model: HamiltonianModel
    grid: TimeGrid
    cost_spec: CostSpec
    psi0: np.ndarray | None
    strategy: Strategy
    grape: GrapeConfig | None
    out_dir: str
    sweep: dict | None
    raw: dict
    qubits: int | None = None
    family: str | None = None


def _parse_model(obj, context: str = "model"):
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object")
    if "family" in obj:
        _check_keys(obj, {"family", "qubits"}, context)
        family = obj["family"]
        if family not in MODEL_FAMILIES:
            raise ConfigError(f"{context}: unknown family {family!r}")
        qubits = obj.get("qubits")
        if not isinstance(qubits, int) or qubits < 1:
            raise ConfigError(f"{context}: 'family' needs integer 'qubits' >= 1")
        model, target = MODEL_FAMILIES[family](qubits)
        return model, target, qubits, family
    _check_keys(obj, {"qubits", "h0", "controls"}, context)
    if "h0" not in obj or "controls" not in obj:
        raise ConfigError(f"{context}: needs 'h0' and 'controls'")
    h0 = build_operator(obj["h0"], f"{context}.h0")
    controls_spec = obj["controls"]
    if not isinstance(controls_spec, list) or not controls_spec:
        raise ConfigError(f"{context}: 'controls' needs a non-empty list")
    ops = [
        build_operator(spec, f"{context}.controls[{i}]")
        for i, spec in enumerate(controls_spec)
    ]
    qubits = obj.get("qubits")
    if qubits is not None:
        if not isinstance(qubits, int) or 2**qubits != h0.shape[0]:
            raise ConfigError(
                f"{context}: 'qubits'={qubits} inconsistent with operator dim {h0.shape[0]}"
            )
    try:
        model = HamiltonianModel(h0, ops)
    except ContractViolation as exc:
        raise ConfigError(f"{context}: {exc}") from exc
    return model, None, qubits, None


def _parse_strategy(obj, n_steps: int, context: str = "strategy") -> Strategy:
    if obj is None:
        return Strategy.store_all()
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object")
    _check_keys(obj, {"kind", "period"}, context)
    kind_name = obj.get("kind", "store-all")
    try:
        kind = StrategyKind(kind_name)
    except ValueError:
        raise ConfigError(
            f"{context}: unknown kind {kind_name!r}; known: {[k.value for k in StrategyKind]}"
        ) from None
    period = resolve_period(obj.get("period"), n_steps, context)
    try:
        return Strategy(kind, period if kind.uses_checkpoints else None)
    except ContractViolation as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def resolve_period(value, n_steps: int, context: str = "period") -> int | None:
    """Interpret a period setting: an integer or the string ``"sqrt"``."""
    if value is None:
        return None
    if value == "sqrt":
        return optimal_checkpoint_period(n_steps)
    if isinstance(value, int) and value >= 1:
        return value
    raise ConfigError(f"{context}: period must be a positive integer or 'sqrt'")


def _parse_cost(obj, dim: int, family_target, context: str = "cost") -> CostSpec:
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object")
    _check_keys(
        obj, {"weights", "target_gate", "target_states", "forbidden_states"}, context
    )
    weights_obj = obj.get("weights", {})
    if not isinstance(weights_obj, dict):
        raise ConfigError(f"{context}.weights: expected an object")
    _check_keys(weights_obj, set(WEIGHT_NAMES), f"{context}.weights")
    weights = {}
    for name in WEIGHT_NAMES:
        w = weights_obj.get(name, 0.0)
        if not isinstance(w, (int, float)):
            raise ConfigError(f"{context}.weights.{name}: expected a number")
        weights[f"w_{name}"] = float(w)
    target_gate = (
        build_operator(obj["target_gate"], f"{context}.target_gate")
        if "target_gate" in obj
        else family_target
    )
    if target_gate is not None and target_gate.shape[0] != dim:
        raise ConfigError(
            f"{context}.target_gate: dim {target_gate.shape[0]} vs model dim {dim}"
        )
    target_states = (
        build_states(obj["target_states"], dim, f"{context}.target_states")
        if "target_states" in obj
        else None
    )
    forbidden_states = (
        build_states(obj["forbidden_states"], dim, f"{context}.forbidden_states")
        if "forbidden_states" in obj
        else None
    )
    try:
        return CostSpec(
            target_gate=target_gate,
            target_states=target_states,
            forbidden_states=forbidden_states,
            **weights,
        )
    except ContractViolation as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_optimizer(obj, strategy: Strategy, context: str = "optimizer") -> GrapeConfig | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object")
    allowed = {
        "step_size",
        "max_iters",
        "fidelity_threshold",
        "amplitude",
        "seed",
        "backtrack",
        "max_backtracks",
    }
    _check_keys(obj, allowed, context)
    try:
        return GrapeConfig(
            step_size=float(obj.get("step_size", 0.1)),
            max_iters=int(obj.get("max_iters", 1000)),
            fidelity_threshold=float(obj.get("fidelity_threshold", 1e-3)),
            strategy=strategy,
            seed=int(obj.get("seed", 0)),
            init_amplitude=float(obj.get("amplitude", 0.1)),
            backtrack=bool(obj.get("backtrack", False)),
            max_backtracks=int(obj.get("max_backtracks", 20)),
        )
    except (TypeError, ValueError, ContractViolation) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_sweep(obj, context: str = "sweep") -> dict | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object")
    _check_keys(obj, {"axis", "values", "repetitions", "strategies"}, context)
    axis = obj.get("axis")
    if axis not in ("qubits", "steps", "checkpoint_period"):
        raise ConfigError(
            f"{context}: axis must be qubits | steps | checkpoint_period, got {axis!r}"
        )
    values = obj.get("values")
    if (
        not isinstance(values, list)
        or not values
        or not all(isinstance(v, int) and v >= 1 for v in values)
        or any(b <= a for a, b in zip(values, values[1:]))
    ):
        raise ConfigError(f"{context}: 'values' must be a strictly increasing list of ints")
    reps = obj.get("repetitions", 3)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError(f"{context}: 'repetitions' must be an integer >= 1")
    strategies = obj.get("strategies")
    if strategies is not None:
        if not isinstance(strategies, list) or not strategies:
            raise ConfigError(f"{context}: 'strategies' must be a non-empty list")
        for name in strategies:
            try:
                StrategyKind(name)
            except ValueError:
                raise ConfigError(f"{context}: unknown strategy {name!r}") from None
    return {"axis": axis, "values": list(values), "repetitions": reps, "strategies": strategies}


def parse_run_config(obj: dict, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from a parsed JSON object.

    ``overrides`` may carry CLI-level settings: strategy, period, seed, out.
    """
    if not isinstance(obj, dict):
        raise ConfigError("top level: expected a JSON object")
    _check_keys(
        obj,
        {"model", "grid", "cost", "initial_states", "strategy", "optimizer", "output", "sweep"},
        "top level",
    )
    overrides = overrides or {}
    if "model" not in obj or "grid" not in obj:
        raise ConfigError("top level: 'model' and 'grid' are required")

    grid_obj = obj["grid"]
    if not isinstance(grid_obj, dict):
        raise ConfigError("grid: expected an object")
    _check_keys(grid_obj, {"steps", "dt"}, "grid")
    if "steps" not in grid_obj or "dt" not in grid_obj:
        raise ConfigError("grid: needs 'steps' and 'dt'")
    if not isinstance(grid_obj["steps"], int) or grid_obj["steps"] < 1:
        raise ConfigError("grid.steps: expected a positive integer")
    try:
        grid = TimeGrid.uniform(grid_obj["steps"], float(grid_obj["dt"]))
    except (TypeError, ValueError, ContractViolation) as exc:
        raise ConfigError(f"grid: {exc}") from exc

    model, family_target, qubits, family = _parse_model(obj["model"])

    strategy_obj = dict(obj.get("strategy") or {})
    if overrides.get("strategy"):
        strategy_obj["kind"] = overrides["strategy"]
    if overrides.get("period"):
        strategy_obj["period"] = overrides["period"]
    if "period" in strategy_obj and strategy_obj["period"] is not None:
        strategy_obj["period"] = resolve_period(strategy_obj["period"], grid.n_steps)
    kind_name = strategy_obj.get("kind", "store-all")
    try:
        kind = StrategyKind(kind_name)
    except ValueError:
        raise ConfigError(f"strategy: unknown kind {kind_name!r}") from None
    if not kind.uses_checkpoints:
        strategy_obj.pop("period", None)
    strategy = _parse_strategy(strategy_obj or None, grid.n_steps)
    try:
        strategy.validate_for(grid.n_steps)
    except ContractViolation as exc:
        raise ConfigError(f"strategy: {exc}") from exc

    cost_spec = _parse_cost(obj.get("cost"), model.dim, family_target)

    psi0 = None
    if "initial_states" in obj:
        psi0 = build_states(obj["initial_states"], model.dim, "initial_states")
    if cost_spec.needs_states and psi0 is None:
        raise ConfigError("cost: state-dependent terms need 'initial_states'")
    if cost_spec.target_states is not None and psi0 is not None:
        if cost_spec.target_states.shape != psi0.shape:
            raise ConfigError("cost.target_states: shape must match 'initial_states'")
    if cost_spec.forbidden_states is not None and psi0 is not None:
        if cost_spec.forbidden_states.shape != psi0.shape:
            raise ConfigError("cost.forbidden_states: shape must match 'initial_states'")

    optimizer = _parse_optimizer(obj.get("optimizer"), strategy)
    if optimizer is not None and overrides.get("seed") is not None:
        optimizer.seed = int(overrides["seed"])

    output_obj = obj.get("output") or {}
    if not isinstance(output_obj, dict):
        raise ConfigError("output: expected an object")
    _check_keys(output_obj, {"dir"}, "output")
    out_dir = overrides.get("out") or output_obj.get("dir") or "."

    sweep = _parse_sweep(obj.get("sweep"))

    return RunConfig(
        model=model,
        grid=grid,
        cost_spec=cost_spec,
        psi0=psi0,
        strategy=strategy,
        grape=optimizer,
        out_dir=str(out_dir),
        sweep=sweep,
        raw=obj,
        qubits=qubits,
        family=family,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_run_config(obj, overrides)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON text for a parsed configuration.

    Parsing the returned text again yields a semantically identical run
    (defaults are materialized; operator expressions stay as written).
    """
    obj = json.loads(json.dumps(cfg.raw))
    obj.setdefault("strategy", {})
    obj["strategy"]["kind"] = cfg.strategy.kind.value
    if cfg.strategy.period is not None:
        obj["strategy"]["period"] = cfg.strategy.period
    else:
        obj["strategy"].pop("period", None)
    obj.setdefault("output", {})["dir"] = cfg.out_dir
    return json.dumps(obj, indent=2, sort_keys=True)
