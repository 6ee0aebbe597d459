"""Command-line interface: simulate | gradcheck | optimize | bench.

Exit codes: 0 success, 1 validation failure (bad config, contract breach,
failed gradient check), 2 numerical abort (non-finite values).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..cost import CostReport
from ..errors import ContractViolation, NumericsError
from ..gradient import evaluate, finite_difference_gradient, gradient
from ..linalg import unitarity_defect
from ..memtrace import KINDS, expected_peak
from ..model import ControlGrid
from ..optimizer import OptimizationTrace, grape, initial_controls
from ..strategy import Strategy, StrategyKind
from .bench import run_sweep, write_bench_outputs
from .config import ConfigError, load_config, resolve_period

_STRATEGY_CHOICES = [k.value for k in StrategyKind]


def _complex_to_pairs(arr: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def _write_csv(path: Path, columns, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)


def _write_controls(path: Path, controls: ControlGrid) -> None:
    payload = {
        "knot_times": [float(t) for t in controls.knot_times],
        "values": [[float(v) for v in row] for row in controls.values],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _read_controls(path: Path, knot_times: np.ndarray) -> ControlGrid:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read controls file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "values" not in payload:
        raise ConfigError(f"controls file {path} needs a 'values' array")
    values = np.asarray(payload["values"], dtype=np.float64)
    if "knot_times" in payload:
        times = np.asarray(payload["knot_times"], dtype=np.float64)
        if times.shape != knot_times.shape or np.max(np.abs(times - knot_times)) > 1e-12:
            raise ConfigError(f"controls file {path} was produced for a different time grid")
    return ControlGrid(values, knot_times)


def _overrides(args) -> dict:
    return {
        "strategy": getattr(args, "strategy", None)
        if getattr(args, "strategy", None) != "all"
        else None,
        "period": getattr(args, "period", None),
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
    }


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    final, report = evaluate(
        cfg.model, cfg.grid, _initial_controls_for(cfg, args), cfg.cost_spec, cfg.psi0,
        include_inactive=True,
    )
    out = Path(cfg.out_dir)
    row = report.as_csv_row()
    row["unitarity_defect"] = repr(unitarity_defect(final.k_mat))
    _write_csv(out / "results.csv", list(CostReport.CSV_COLUMNS) + ["unitarity_defect"], [row])
    state_payload = {"propagator": _complex_to_pairs(final.k_mat)}
    if final.states is not None:
        state_payload["final_states"] = _complex_to_pairs(final.states)
    (out / "state.json").write_text(json.dumps(state_payload, indent=2) + "\n", encoding="utf-8")
    print(f"simulate: {cfg.grid.n_steps} steps, dim {cfg.model.dim}")
    print(f"  total cost {report.total:.6e}, gate infidelity {report.gate_infidelity:.6e}")
    print(f"  wrote {out / 'results.csv'} and {out / 'state.json'}")
    return 0


def _initial_controls_for(cfg, args) -> ControlGrid:
    """Controls for non-optimizing commands: zeros unless a file or seed is given."""
    if getattr(args, "controls", None):
        return _read_controls(Path(args.controls), cfg.grid.knot_times)
    if getattr(args, "seed", None) is not None:
        amplitude = cfg.grape.init_amplitude if cfg.grape is not None else 0.1
        return initial_controls(cfg.model, cfg.grid, amplitude, args.seed)
    m = cfg.model.n_controls
    return ControlGrid(np.zeros((m, cfg.grid.n_steps + 1)), cfg.grid.knot_times)


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    controls = _initial_controls_for(cfg, args)
    if np.all(controls.values == 0) and getattr(args, "seed", None) is None:
        # A zero start sits at a stationary point of some terms; nudge it.
        controls = initial_controls(cfg.model, cfg.grid, 0.1, 0)
    if not cfg.cost_spec.needs_reverse_sweep and cfg.cost_spec.w_energy == 0 and cfg.cost_spec.w_smoothness == 0:
        raise ConfigError("gradcheck needs at least one cost term with nonzero weight")

    if args.strategy == "all":
        period = cfg.strategy.period or resolve_period("sqrt", cfg.grid.n_steps)
        strategies = [
            Strategy.store_all(),
            Strategy.checkpoint(period),
            Strategy.revert(),
            Strategy.revert_checkpoint(period),
        ]
    else:
        strategies = [cfg.strategy]  # any --strategy override is already applied

    fd = finite_difference_gradient(
        cfg.model, cfg.grid, controls, cfg.cost_spec, cfg.psi0, h=args.fd_step
    )
    scale = np.max(np.abs(fd)) + 1e-300
    # guard the denominator so the finite-difference noise floor on
    # near-zero components does not drown the per-knot relative error
    denom = np.maximum(np.abs(fd), 1e-3 * scale)
    rows = []
    grads = {}
    results = {}
    all_pass = True
    for strategy in strategies:
        result = gradient(cfg.model, cfg.grid, controls, cfg.cost_spec, cfg.psi0, strategy)
        grads[strategy.kind.value] = result.grad
        results[strategy.kind.value] = result
        rel = np.abs(result.grad - fd) / denom
        for k in range(controls.n_controls):
            for j in range(controls.n_knots):
                ok = rel[k, j] <= args.tolerance
                all_pass &= bool(ok)
                rows.append(
                    {
                        "strategy": strategy.kind.value,
                        "channel": k,
                        "knot": j,
                        "analytic": repr(result.grad[k, j]),
                        "finite_difference": repr(fd[k, j]),
                        "rel_error": repr(float(rel[k, j])),
                        "pass": "pass" if ok else "FAIL",
                    }
                )
        worst = float(np.max(rel))
        print(
            f"gradcheck [{strategy.kind.value}]: max rel error {worst:.3e} "
            f"(tolerance {args.tolerance:.1e}) -> {'pass' if worst <= args.tolerance else 'FAIL'}"
        )

    out = Path(cfg.out_dir)
    _write_csv(
        out / "gradcheck.csv",
        ("strategy", "channel", "knot", "analytic", "finite_difference", "rel_error", "pass"),
        rows,
    )
    if len(strategies) > 1:
        names = [s.kind.value for s in strategies]
        print("cross-strategy max relative deviation:")
        header = " " * 18 + "  ".join(f"{n:>18}" for n in names)
        print(header)
        ref_scale = max(float(np.max(np.abs(g))) for g in grads.values()) + 1e-300
        for a in names:
            cells = []
            for b in names:
                diff = float(np.max(np.abs(grads[a] - grads[b]))) / ref_scale
                cells.append(f"{diff:>18.3e}")
            print(f"{a:>18}" + "  " + "  ".join(cells))
    # per-strategy ledger snapshots next to their closed-form predictions
    n_states = 0 if cfg.psi0 is None or not cfg.cost_spec.needs_states else cfg.psi0.shape[1]
    ledger_rows = []
    for strategy in strategies:
        predicted = expected_peak(
            strategy.kind, cfg.grid.n_steps, strategy.period, cfg.model.dim, n_states
        )
        result = results[strategy.kind.value]
        for kind in KINDS:
            ledger_rows.append(
                {
                    "kind": kind,
                    "strategy": strategy.kind.value,
                    "live_peak": result.ledger.peak_counts[kind],
                    "bytes_peak": result.ledger.peak_bytes,
                    "predicted": predicted.counts[kind],
                }
            )
    _write_csv(out / "ledger.csv", ("kind", "strategy", "live_peak", "bytes_peak", "predicted"), ledger_rows)
    if not all_pass:
        print("gradcheck: FAILED", file=sys.stderr)
        return 1
    return 0


def cmd_optimize(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    if cfg.grape is None:
        raise ConfigError("optimize needs an 'optimizer' section in the config")
    initial = None
    if args.resume:
        initial = _read_controls(Path(args.resume), cfg.grid.knot_times)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # stream the trace so long optimizations are observable as they run
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(OptimizationTrace.CSV_COLUMNS))
        writer.writeheader()

        def stream(record):
            writer.writerow({name: repr(getattr(record, name)) for name in OptimizationTrace.CSV_COLUMNS})
            fh.flush()

        controls, trace = grape(
            cfg.model, cfg.grid, cfg.cost_spec, cfg.grape, cfg.psi0,
            initial=initial, on_iteration=stream,
        )
    _write_controls(out / "controls.json", controls)
    final_f0 = trace.records[-1].gate_infidelity if trace.records else float("nan")
    print(
        f"optimize: {len(trace)} iterations, converged={trace.converged}, "
        f"last gate infidelity {final_f0:.6e}"
    )
    print(f"  wrote {out / 'controls.json'} and {out / 'trace.csv'}")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    sweep = cfg.sweep
    if sweep is None:
        raise ConfigError("bench needs a 'sweep' section in the config")
    if getattr(args, "strategy", None) and args.strategy != "all":
        sweep["strategies"] = [args.strategy]
    rows = run_sweep(cfg, workers=args.workers, seed=args.seed if args.seed is not None else 0)
    csv_path = write_bench_outputs(rows, cfg.out_dir)
    print(f"bench: {len(rows)} rows -> {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qocgrape",
        description="GRAPE pulse optimization with memory-aware adjoint strategies",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_workers=False):
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument(
            "--strategy",
            choices=_STRATEGY_CHOICES + ["all"],
            default=None,
            help="override the configured adjoint-memory strategy",
        )
        p.add_argument(
            "--period",
            default=None,
            help="checkpoint period: a positive integer or 'sqrt'",
        )
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        if with_workers:
            p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")

    p_sim = sub.add_parser("simulate", help="forward evolution and cost report")
    add_common(p_sim)
    p_sim.add_argument("--controls", default=None, help="controls.json to simulate")
    p_sim.set_defaults(func=cmd_simulate)

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of the gradient")
    add_common(p_grad)
    p_grad.add_argument("--controls", default=None, help="controls.json to check at")
    p_grad.add_argument("--fd-step", type=float, default=1e-6, help="central-difference step")
    p_grad.add_argument("--tolerance", type=float, default=1e-5, help="per-knot relative tolerance")
    p_grad.set_defaults(func=cmd_gradcheck)

    p_opt = sub.add_parser("optimize", help="run the gradient-descent pulse optimization")
    add_common(p_opt)
    p_opt.add_argument("--resume", default=None, help="controls.json to resume from")
    p_opt.set_defaults(func=cmd_optimize)

    p_bench = sub.add_parser("bench", help="sweep qubits/steps/period and record memory+time")
    add_common(p_bench, with_workers=True)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "period", None) is not None and args.period != "sqrt":
        try:
            args.period = int(args.period)
        except ValueError:
            print("error: --period must be a positive integer or 'sqrt'", file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except (ConfigError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
