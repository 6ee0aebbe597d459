#!/usr/bin/env python3
"""Compare the numba-compiled kernels against the pure-numpy fallback.

Runs the same workloads twice in subprocesses, once per backend
(``QOCGRAPE_BACKEND=numba`` / ``numpy``), and prints a speedup table.
Workloads: the matrix exponential kernel alone, its adjoint, and a full
gradient evaluation per strategy.

Usage: python benchmarks/backend_bench.py [--dim 8] [--steps 256] [--reps 5]
"""

import argparse
import json
import os
import statistics
import subprocess
import sys

CHILD_FLAG = "--child"


def child(dim: int, steps: int, reps: int) -> None:
    import time

    import numpy as np

    import qocgrape
    from qocgrape.kernels import expm_frechet_kernel, expm_kernel, warmup

    warmup()
    rng = np.random.default_rng(0)
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = np.ascontiguousarray(-0.05j * (h + h.conj().T))
    g = np.ascontiguousarray(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))

    def timeit(fn, n=2000):
        fn()  # compile / warm caches
        best = []
        for _ in range(reps):
            t0 = time.perf_counter()
            for _ in range(n):
                fn()
            best.append((time.perf_counter() - t0) / n)
        return statistics.median(best)

    results = {
        "backend": qocgrape.ACTIVE_BACKEND,
        f"expm {dim}x{dim} (us)": timeit(lambda: expm_kernel(h)) * 1e6,
        f"expm adjoint {dim}x{dim} (us)": timeit(lambda: expm_frechet_kernel(h, g), n=500) * 1e6,
    }

    qubits = max(1, dim.bit_length() - 1)
    from qocgrape import ControlGrid, CostSpec, Strategy, TimeGrid, gradient
    from qocgrape.harness.config import zz_chain_family

    model, target = zz_chain_family(qubits)
    grid = TimeGrid.uniform(steps, 0.05)
    controls = ControlGrid(
        rng.uniform(-0.2, 0.2, (model.n_controls, steps + 1)), grid.knot_times
    )
    spec = CostSpec(w_gate=1.0, target_gate=target)
    for strategy in (
        Strategy.store_all(),
        Strategy.checkpoint(max(1, int(round(steps**0.5)))),
        Strategy.revert(),
    ):
        def run(strategy=strategy):
            gradient(model, grid, controls, spec, None, strategy)

        label = f"gradient q={qubits} N={steps} [{strategy.kind.value}] (ms)"
        results[label] = timeit(run, n=3) * 1e3

    print(json.dumps(results))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--steps", type=int, default=256)
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument(CHILD_FLAG, action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.child:
        child(args.dim, args.steps, args.reps)
        return 0

    rows = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, QOCGRAPE_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), CHILD_FLAG,
             "--dim", str(args.dim), "--steps", str(args.steps), "--reps", str(args.reps)],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        assert payload.pop("backend") == backend
        rows[backend] = payload

    width = max(len(k) for k in rows["numpy"])
    print(f"{'workload':<{width}}  {'numpy':>12}  {'numba':>12}  {'speedup':>8}")
    for key in rows["numpy"]:
        np_t, nb_t = rows["numpy"][key], rows["numba"][key]
        print(f"{key:<{width}}  {np_t:>12.2f}  {nb_t:>12.2f}  {np_t / nb_t:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
