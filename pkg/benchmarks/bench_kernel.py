#!/usr/bin/env python3
"""Benchmark the level-sweep kernel: numba vs pure numpy.

Builds the sweep arrays once for a configurable deadline dimension, then
times repeated full-horizon sweeps per backend (array setup and table
bookkeeping are identical across backends, so only the kernel is timed).
The first numba call JIT-compiles; a warmup sweep runs before timing.

    python benchmarks/bench_kernel.py [--n 7] [--levels 5000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from deadline_offload import dp, kernels
from deadline_offload.model import ModelParams


def build_arrays(n: int):
    params = ModelParams.uniform_arrivals(N=n, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, p0=0.5)
    seeds = [tuple(range(n)), (0,) * (n - 1) + (n,)]
    table = dp.build_table(params, n + 1, seeds, backend="numpy", count_naive=False)
    return params, table._kernel_arrays, table.stats.kernel_states


def time_sweeps(arrays, p_u: float, levels: int, repeat: int, backend: str) -> float:
    m = arrays.n_states
    j_prev = np.zeros(m)
    j_out = np.empty(m)
    ama = np.empty(m)
    no_ama = np.empty(m)
    argmin = np.empty(m, dtype=np.int64)
    kernels.sweep_level(arrays, p_u, j_prev, j_out, ama, no_ama, argmin, backend=backend)
    best = float("inf")
    for _ in range(repeat):
        j = np.zeros(m)
        start = time.perf_counter()
        for _ in range(levels):
            kernels.sweep_level(arrays, p_u, j, j_out, ama, no_ama, argmin,
                                backend=backend)
            j, j_out = j_out, j
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=7, help="deadline dimension")
    parser.add_argument("--levels", type=int, default=5000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    params, arrays, n_states = build_arrays(args.n)
    print(f"N={args.n}: {n_states} compressed states, {arrays.n_pairs} decision rows, "
          f"{arrays.weight.size} successor terms; {args.levels} levels per sweep")

    t_numba = time_sweeps(arrays, params.p_u, args.levels, args.repeat, "numba")
    t_numpy = time_sweeps(arrays, params.p_u, args.levels, args.repeat, "numpy")
    per_level = t_numba / args.levels * 1e6
    print(f"numba : {t_numba:8.3f} s  ({per_level:7.1f} us/level, best of {args.repeat})")
    per_level = t_numpy / args.levels * 1e6
    print(f"numpy : {t_numpy:8.3f} s  ({per_level:7.1f} us/level, best of {args.repeat})")
    print(f"ratio : numpy/numba = {t_numpy / t_numba:.2f}x")


if __name__ == "__main__":
    main()
