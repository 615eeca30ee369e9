"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the per-path hot loops (word sampling + QR accumulation, projective and
density-matrix trajectories) on a Markov family and a dense random family
and prints a timing table with speedups.

Usage: python benchmarks/bench_kernels.py [--n-steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from channel_ergodics import MarkovSpec, fixed_point, markov_channel
from channel_ergodics._kernels import available_backends
from channel_ergodics.linalg import haar_unitary
from channel_ergodics.spectral import normalize
from channel_ergodics.channel import KrausMeasure


def bench(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def channel_cases():
    markov = markov_channel(MarkovSpec(P=np.array([[0.7, 0.4], [0.3, 0.6]])))
    rng = np.random.default_rng(0)
    mats = (rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))) / 2
    dense = normalize(KrausMeasure.from_arrays(mats))
    return [("markov k=2 m=4", markov), ("dense k=4 m=3", dense)]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n-steps", type=int, default=50_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; run `pip install -e .` first")
    names = list(backends)

    rows = []
    for label, km in channel_cases():
        rho = fixed_point(km)
        rng = np.random.default_rng(123)
        uniforms = rng.random(args.n_steps)
        q0 = haar_unitary(km.dim, rng)
        x0 = np.zeros(km.dim, dtype=complex)
        x0[0] = 1.0

        cases = {
            "lyapunov_path": lambda mod: mod.lyapunov_path(
                km.matrices, km.weights, rho, q0, uniforms, 1e-150, 1
            ),
            "trajectory_path": lambda mod: mod.trajectory_path(
                km.matrices, km.weights, rho, uniforms, False
            ),
            "x_process_path": lambda mod: mod.x_process_path(
                km.matrices, km.weights, x0, uniforms, False
            ),
        }
        for case, runner in cases.items():
            times = {}
            for name in names:
                mod = backends[name]
                times[name] = bench(lambda: runner(mod), args.repeat)
            rows.append((label, case, times))

    width = max(len(f"{label} / {case}") for label, case, _ in rows) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(f"n_steps = {args.n_steps}, best of {args.repeat}")
    print(header)
    print("-" * len(header))
    for label, case, times in rows:
        line = f"{label + ' / ' + case:<{width}}"
        for n in names:
            line += f"{times[n] * 1e3:>12.1f}ms"
        if len(names) == 2:
            line += f"{times['pure'] / times['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
