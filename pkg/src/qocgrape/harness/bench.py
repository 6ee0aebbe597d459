"""Benchmark sweeps over qubit count, step count, or checkpoint period.

Each sweep point runs one gradient evaluation per strategy, repeated a few
times; wall time is the median of a monotonic clock around the gradient
call only.  Every CSV row carries the measured peak counts/bytes from the
memory ledger next to the closed-form prediction, plus the reconstruction
error for the reversibility strategies.  Two-column ``.dat`` files (one per
strategy and metric) are emitted alongside for plotting.
"""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..cost import CostSpec
from ..gradient import gradient
from ..kernels import warmup
from ..memtrace import KIND_PROPAGATOR, KIND_STATES, KIND_UNITARY, expected_peak
from ..model import TimeGrid
from ..optimizer import initial_controls
from ..strategy import Strategy, StrategyKind
from .config import ConfigError, MODEL_FAMILIES, RunConfig, parse_run_config, resolve_period

BENCH_CSV_COLUMNS = (
    "axis",
    "value",
    "strategy",
    "period",
    "qubits",
    "n_steps",
    "wall_time_s",
    "peak_unitary",
    "peak_propagator",
    "peak_states",
    "predicted_unitary",
    "predicted_propagator",
    "predicted_states",
    "peak_bytes",
    "predicted_bytes",
    "reconstruction_error",
)

_DEFAULT_STRATEGIES = {
    "qubits": [k.value for k in StrategyKind],
    "steps": [k.value for k in StrategyKind],
    "checkpoint_period": [
        StrategyKind.CHECKPOINT.value,
        StrategyKind.REVERT_CHECKPOINT.value,
    ],
}


def _point_config(cfg: RunConfig, axis: str, value: int) -> tuple:
    """Model/grid/psi0/cost for one sweep point."""
    if axis == "qubits":
        if cfg.family is None:
            raise ConfigError("a qubit sweep needs a 'family' model (it must scale with q)")
        spec = cfg.cost_spec
        if spec.needs_states:
            raise ConfigError(
                "a qubit sweep supports gate/control cost terms only "
                "(state targets cannot scale with q)"
            )
        model, target = MODEL_FAMILIES[cfg.family](value)
        cost_spec = CostSpec(
            w_gate=spec.w_gate,
            w_running_gate=spec.w_running_gate,
            w_energy=spec.w_energy,
            w_smoothness=spec.w_smoothness,
            target_gate=target if spec.target_gate is not None else None,
        )
        return model, cfg.grid, None, cost_spec
    if axis == "steps":
        grid = TimeGrid.uniform(value, cfg.grid.dt)
        return cfg.model, grid, cfg.psi0, cfg.cost_spec
    # checkpoint_period: the value replaces the strategy period below
    return cfg.model, cfg.grid, cfg.psi0, cfg.cost_spec


def _strategy_for_point(kind: StrategyKind, cfg: RunConfig, axis: str, value: int, n_steps: int) -> Strategy:
    if not kind.uses_checkpoints:
        return Strategy(kind)
    if axis == "checkpoint_period":
        period = value
    else:
        raw_period = None
        if isinstance(cfg.raw.get("strategy"), dict):
            raw_period = cfg.raw["strategy"].get("period")
        period = resolve_period(raw_period if raw_period is not None else "sqrt", n_steps)
    return Strategy(kind, period)


def run_point(raw_config: dict, axis: str, value: int, kind_name: str, repetitions: int, seed: int) -> dict:
    """One (sweep value, strategy) measurement; safe to run in a worker process."""
    warmup()
    cfg = parse_run_config(raw_config)
    model, grid, psi0, cost_spec = _point_config(cfg, axis, value)
    kind = StrategyKind(kind_name)
    strategy = _strategy_for_point(kind, cfg, axis, value, grid.n_steps)
    strategy.validate_for(grid.n_steps)
    controls = initial_controls(model, grid, amplitude=0.1, seed=seed)

    times = []
    result = None
    for _ in range(repetitions):
        t0 = time.monotonic()
        result = gradient(model, grid, controls, cost_spec, psi0, strategy)
        times.append(time.monotonic() - t0)

    n_states = 0 if psi0 is None or not cost_spec.needs_states else psi0.shape[1]
    predicted = expected_peak(
        kind, grid.n_steps, strategy.period, dim=model.dim, n_states=n_states
    )
    peaks = result.ledger.peak_counts
    return {
        "axis": axis,
        "value": value,
        "strategy": kind.value,
        "period": strategy.period if strategy.period is not None else "",
        "qubits": int(model.dim).bit_length() - 1,
        "n_steps": grid.n_steps,
        "wall_time_s": repr(statistics.median(times)),
        "peak_unitary": peaks[KIND_UNITARY],
        "peak_propagator": peaks[KIND_PROPAGATOR],
        "peak_states": peaks[KIND_STATES],
        "predicted_unitary": predicted.counts[KIND_UNITARY],
        "predicted_propagator": predicted.counts[KIND_PROPAGATOR],
        "predicted_states": predicted.counts[KIND_STATES],
        "peak_bytes": result.ledger.peak_bytes,
        "predicted_bytes": predicted.n_bytes,
        "reconstruction_error": repr(result.reconstruction_error),
    }


def run_sweep(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list[dict]:
    if cfg.sweep is None:
        raise ConfigError("bench needs a 'sweep' section in the config")
    axis = cfg.sweep["axis"]
    strategies = cfg.sweep["strategies"] or _DEFAULT_STRATEGIES[axis]
    reps = cfg.sweep["repetitions"]
    points = [
        (cfg.raw, axis, value, kind_name, reps, seed)
        for value in cfg.sweep["values"]
        for kind_name in strategies
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_point, *zip(*points)))
    else:
        rows = [run_point(*point) for point in points]
    return rows


def write_bench_outputs(rows: list[dict], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    # one two-column file per (strategy, metric) curve
    by_strategy: dict[str, list[dict]] = {}
    for row in rows:
        by_strategy.setdefault(row["strategy"], []).append(row)
    for name, strategy_rows in by_strategy.items():
        for metric, column in (("mem", "peak_bytes"), ("time", "wall_time_s")):
            path = out / f"plot_{metric}_{name}.dat"
            with open(path, "w", encoding="utf-8") as fh:
                for row in strategy_rows:
                    fh.write(f"{row['value']} {row[column]}\n")
    return csv_path
