"""Compiled vs numpy kernels on the Sleeper workload.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times orbit canonicalization of all 2^16 binary 4x4 tables under S4 x S4 and
the outcome histograms of the 317 representatives, and checks that both
backends agree exactly.
"""
import argparse
import time

import numpy as np

from psinflation import _pykernels, strategy
from psinflation.sleeper import sleeper_model

try:
    from psinflation import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    tables = strategy.all_tables(16, 2)
    maps = strategy.RelabelGroup.independent(2).position_maps((4, 4))
    model = sleeper_model()
    reps = model.columns
    # the histogram is cheap on 317 rows; repeat the representatives to get a measurable load
    load = np.ascontiguousarray(np.tile(reps, (64, 1)))

    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    results = {}
    print(f"{'kernel':<14}{'backend':<9}{'seconds':>10}")
    for name, mod in backends:
        t1, canon = best_of(lambda: mod.canonicalize_tables(tables, maps), args.repeat)
        t2, hist = best_of(lambda: [mod.outcome_histogram(load, b.positions, b.radix, b.nrows)
                                    for b in model.blocks], args.repeat)
        results[name] = (canon, hist)
        print(f"{'canonicalize':<14}{name:<9}{t1:>10.4f}")
        print(f"{'histogram':<14}{name:<9}{t2:>10.4f}")
    if len(results) == 2:
        (c1, h1), (c2, h2) = results["python"], results["cython"]
        same = np.array_equal(c1, c2) and all(np.array_equal(a, b) for a, b in zip(h1, h2))
        print("backends agree" if same else "BACKENDS DISAGREE")
        print(f"orbits: {len(np.unique(c2, axis=0))}")
    else:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
