#!/usr/bin/env python3
"""Benchmark the jit kernels against the pure-numpy fallback.

Runs the same workloads twice in subprocesses, once with COL_NUMBA=1 and
once with COL_NUMBA=0 (module import selects the backend), times them, and
verifies the two backends produce bit-identical traces.

    python benchmarks/bench_kernels.py
"""

import argparse
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

WORKLOADS = ("tracking_trace", "il_stochastic_trace", "simplex_project")


def _run_workload(name: str, out_path: str) -> None:
    import col._kernels as k

    rng = np.random.default_rng(0)
    if name == "tracking_trace":
        n, d = 200_000, 2
        mat = 0.5 * np.eye(d)
        noise = 0.5 * rng.standard_normal((n, d))
        zeros = np.zeros((n, d))
        etas = 1.0 / np.sqrt(np.arange(1, n + 1))
        args = (k.MODE_MIRROR, 2.0, mat, np.zeros(d), k.SET_BOX,
                -np.ones(d), np.ones(d), np.zeros(d), 1.0,
                np.array([1.0, 0.0]), etas, 0.0, noise, zeros, zeros,
                np.zeros(d), True)
        k.tracking_trace(*args)  # warm-up (jit compile)
        t0 = time.perf_counter()
        out = k.tracking_trace(*args)
        elapsed = time.perf_counter() - t0
        arrays = {f"a{i}": np.asarray(v) for i, v in enumerate(out)}
    elif name == "il_stochastic_trace":
        n, s, a, h = 20_000, 3, 2, 5
        p = rng.dirichlet(np.ones(s), size=(s, a))
        p0 = rng.dirichlet(np.ones(s))
        expert = rng.dirichlet(np.ones(a), size=s)
        pi1 = np.full((s, a), 1.0 / a)
        etas = 1.0 / np.sqrt(np.arange(1, n + 1))
        u1 = rng.uniform(size=(n, h))
        u2 = rng.uniform(size=(n, h))
        args = (p, p0, expert, 1.0, h, pi1, etas, u1, u2)
        k.il_stochastic_trace(*args)
        t0 = time.perf_counter()
        out = k.il_stochastic_trace(*args)
        elapsed = time.perf_counter() - t0
        arrays = {f"a{i}": np.asarray(v) for i, v in enumerate(out)}
    else:
        vecs = rng.standard_normal((200_000, 16))
        k.simplex_project(vecs[0])
        t0 = time.perf_counter()
        out = np.stack([k.simplex_project(v) for v in vecs])
        elapsed = time.perf_counter() - t0
        arrays = {"a0": out}
    np.savez(out_path, elapsed=elapsed, backend=k.BACKEND, **arrays)


def _spawn(name: str, numba_flag: str, out_path: str) -> None:
    env = dict(os.environ, COL_NUMBA=numba_flag)
    subprocess.run([sys.executable, __file__, "--worker", name,
                    "--out", out_path], env=env, check=True)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--worker", default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    if args.worker:
        _run_workload(args.worker, args.out)
        return 0

    print(f"{'workload':<24} {'numba':>10} {'numpy':>10} {'speedup':>9}  identical")
    with tempfile.TemporaryDirectory() as tmp:
        for name in WORKLOADS:
            paths = {}
            for flag in ("1", "0"):
                paths[flag] = os.path.join(tmp, f"{name}_{flag}.npz")
                _spawn(name, flag, paths[flag])
            jit = np.load(paths["1"])
            py = np.load(paths["0"])
            same = all(np.array_equal(jit[key], py[key])
                       for key in jit.files if key.startswith("a"))
            t_jit = float(jit["elapsed"])
            t_py = float(py["elapsed"])
            print(f"{name:<24} {t_jit:>9.4f}s {t_py:>9.4f}s {t_py / t_jit:>8.1f}x  {same}")
            if not same:
                raise SystemExit(f"backend mismatch in {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
