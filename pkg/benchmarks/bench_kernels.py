"""Timing of the numba and numpy paths of the Taylor-series source kernel.

Also times one full ``march_series`` call under each path, so the share of
the kernel in a realistic hierarchy solve is visible (the FFTs are shared).

    python benchmarks/bench_kernels.py [--samples 200] [--orders 4] [--repeat 5]
"""
import argparse
import time

import numpy as np

from gpam_laplace import _kernels
from gpam_laplace.hierarchy import march_series
from gpam_laplace.solvers import make_context, solve_skeleton


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_kernel(M, S, n, repeat):
    rng = np.random.default_rng(0)
    Q = n * n
    g = rng.standard_normal((M + 2, Q))
    c = rng.standard_normal((M, S, Q))
    d = rng.standard_normal((S, Q))
    h = rng.standard_normal(Q)
    ref = _kernels.source_series_numpy(g, c, d, h, 0.3)
    out = {"numpy": _best(lambda: _kernels.source_series_numpy(g, c, d, h, 0.3), repeat)}
    if _kernels.HAS_NUMBA:
        got = _kernels.source_series_numba(g, c, d, h, 0.3)  # compile
        out["numba"] = _best(lambda: _kernels.source_series_numba(g, c, d, h, 0.3), repeat)
        out["max_abs_diff"] = float(np.abs(got - ref).max())
    return out


def bench_march(M, S, n, repeat):
    ctx = make_context(n=n, T=0.1, dt=0.1 / 32, u0=np.ones((n, n)), g="cos")
    h = np.zeros(ctx.grid.shape)
    w = solve_skeleton(ctx, h)
    drivers = np.random.default_rng(1).standard_normal((S, n, n))
    out = {}
    saved = _kernels.USE_NUMBA
    try:
        for label, flag in (("numpy", False), ("numba", True)):
            if flag and not _kernels.HAS_NUMBA:
                continue
            _kernels.USE_NUMBA = flag
            march_series(ctx, w, h, drivers[:2], 0.3, M)
            out[label] = _best(lambda: march_series(ctx, w, h, drivers, 0.3, M), repeat)
    finally:
        _kernels.USE_NUMBA = saved
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--orders", type=int, default=4)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    k = bench_kernel(a.orders, a.samples, a.n, a.repeat)
    print("source_series  M=%d S=%d n=%d" % (a.orders, a.samples, a.n))
    for key in ("numpy", "numba"):
        if key in k:
            print("  %-6s %8.2f ms" % (key, 1e3 * k[key]))
    if "numba" in k:
        print("  speed-up %.1fx, max |diff| %.2e" % (k["numpy"] / k["numba"], k["max_abs_diff"]))
    m = bench_march(a.orders, a.samples, a.n, max(1, a.repeat // 2))
    print("march_series (32 steps)")
    for key, v in m.items():
        print("  %-6s %8.2f ms" % (key, 1e3 * v))


if __name__ == "__main__":
    main()
