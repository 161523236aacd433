"""Compiled vs pure-Python orbit scanning on the named maps.

    python3 benchmarks/bench_kernels.py [--size 20000] [--repeat 3]

Both backends must agree row for row; the script checks that before timing.
"""

import argparse
import time

import numpy as np

from collatzlab import kernels
from collatzlab.core import PRESETS

CASES = [
    ("classic", 100_000, None),
    ("m4-6-a", 100_000, None),
    ("m12-15", 100_000, None),
    ("m4-6-div", 10_000, 10**60),
]


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--size", type=int, default=20_000, help="starts per case")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.backend() != "cython":
        print("compiled kernel not available; only the Python backend can be timed")
    print(f"{'map':10s} {'starts':>8s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, steps, limit in CASES:
        spec = PRESETS[name]
        size = args.size

        def run(impl):
            return kernels.scan_range(spec.p, spec.q, spec.r, 1, size, steps, limit,
                                      threads=1, impl=impl)

        py = best_of(lambda: run("python"), args.repeat)
        if kernels.backend() == "cython":
            a, b = run("python"), run("cython")
            for f in kernels.FIELDS:
                assert np.array_equal(a[f].astype(object), b[f].astype(object)), (name, f)
            cy = best_of(lambda: run("cython"), args.repeat)
            print(f"{name:10s} {size:8d} {py:10.3f} {cy:10.4f} {py / cy:8.1f}x")
        else:
            print(f"{name:10s} {size:8d} {py:10.3f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
