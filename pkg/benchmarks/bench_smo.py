"""Benchmark: compiled SMO extension vs the pure-Python fallback.

Usage: python benchmarks/bench_smo.py [sizes...]
"""

import sys
import time

import numpy as np

from focuswatch import _slowsmo
from focuswatch.anomaly import KernelSpec, kernel_matrix, median_gamma

try:
    from focuswatch import _fastsmo
except ImportError:
    _fastsmo = None


def bench(solver, K, c, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        alpha, grad, iters, viol, ok = solver(K, c, 1e-6, 100 * len(K))
        best = min(best, time.perf_counter() - t0)
    assert ok, "solver did not converge"
    return best, iters


def main():
    sizes = [int(s) for s in sys.argv[1:]] or [200, 500, 1000, 2000, 4000]
    nu = 0.1
    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}  iters")
    for n in sizes:
        x = rng.normal(size=(n, 35))
        spec = KernelSpec("rbf", median_gamma(x))
        K = np.ascontiguousarray(kernel_matrix(spec, x, x))
        c = 1.0 / (nu * n)
        t_py, it_py = bench(_slowsmo.solve, K, c)
        if _fastsmo is None:
            print(f"{n:>6} {t_py:>12.4f} {'(not built)':>13}")
            continue
        t_c, it_c = bench(_fastsmo.solve, K, c)
        assert it_py == it_c, "backends diverged"
        print(f"{n:>6} {t_py:>12.4f} {t_c:>13.4f} {t_py / t_c:>7.1f}x  {it_c}")


if __name__ == "__main__":
    main()
