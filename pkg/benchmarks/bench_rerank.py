"""Benchmark: compiled vs pure-Python re-ranking kernels.

Two workloads:
  * per-entry  — one promotion pass per beam (the `rerank` command path)
  * tune-grid  — the pass replayed for every (threshold, entry) pair
                 (the `tune` command path, where the compiled kernel pays off)

Usage: python benchmarks/bench_rerank.py [--entries N] [--beam N] [--grid N]
"""

import argparse
import math
import random
import time

from beamjudge import _rerank_py

try:
    from beamjudge import _rerank_core
except ImportError:
    _rerank_core = None


def make_workload(n_entries, beam_size, seed=7):
    rng = random.Random(seed)
    return [[rng.random() for _ in range(beam_size)] for _ in range(n_entries)]


def make_grid(n_points):
    return [i / (n_points - 1) for i in range(n_points)] + [math.inf]


def time_call(fn, repeats=3):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entries", type=int, default=2000)
    parser.add_argument("--beam", type=int, default=40)
    parser.add_argument("--grid", type=int, default=101)
    args = parser.parse_args()

    workload = make_workload(args.entries, args.beam)
    grid = make_grid(args.grid)
    backends = [("python", _rerank_py)]
    if _rerank_core is not None:
        backends.append(("compiled", _rerank_core))
    else:
        print("compiled kernels not built; benchmarking pure Python only")

    print(f"workload: {args.entries} entries x beam {args.beam}, "
          f"grid of {len(grid)} thresholds\n")
    results = {}
    for name, mod in backends:
        per_entry = time_call(
            lambda m=mod: [m.rerank_pass(s, 0.1) for s in workload]
        )
        tune_grid = time_call(lambda m=mod: m.grid_top_indices(workload, grid))
        results[name] = (per_entry, tune_grid)
        print(f"{name:>9}: per-entry {per_entry * 1e3:8.2f} ms   "
              f"tune-grid {tune_grid * 1e3:9.2f} ms")

    if len(results) == 2:
        py_pe, py_tg = results["python"]
        c_pe, c_tg = results["compiled"]
        print(f"\nspeedup: per-entry {py_pe / c_pe:5.1f}x   "
              f"tune-grid {py_tg / c_tg:5.1f}x")

    # the two backends must agree before any timing claim means anything
    if _rerank_core is not None:
        sample = workload[:50]
        for t in (0.0, 0.1, 0.7, math.inf):
            for scores in sample:
                assert _rerank_core.rerank_pass(scores, t) == _rerank_py.rerank_pass(scores, t)
        assert _rerank_core.grid_top_indices(sample, grid) == _rerank_py.grid_top_indices(sample, grid)
        print("agreement check: ok")


if __name__ == "__main__":
    main()
