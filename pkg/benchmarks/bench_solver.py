"""Timing comparison of the two Darcy solver backends.

Runs the same set of solves through the numba kernel and the pure-numpy
fallback and prints per-solve times plus the speedup. The first numba call
includes JIT compilation; a warmup solve is excluded from the timings.

Usage: python benchmarks/bench_solver.py [--sizes 16,33,65,129] [--repeats 5]
"""

import argparse
import time

import numpy as np

from nobench.accel import numba_impl, numpy_impl
from nobench.darcy import PermeabilityField
from nobench.fields import Grid2D
from nobench.grf import GRFConfig, binarize, sample_grf
from nobench.rng import child_rng


def time_backend(fn, a, g, hx, hy, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        u, rel, iters, ok = fn(a, g, hx, hy, 1e-10, 50_000)
        best = min(best, time.perf_counter() - t0)
    assert ok
    return best, iters


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="16,33,65,129")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = []
    try:
        backends.append(("numba", numba_impl.darcy_pcg))
    except Exception as err:  # pragma: no cover
        print(f"numba backend unavailable: {err!r}")
    backends.append(("numpy", numpy_impl.darcy_pcg))

    # warmup triggers JIT compilation outside the timed region
    grid = Grid2D(16, 16)
    perm = binarize(sample_grf(GRFConfig(grid), child_rng(0)), 3.0, 12.0)
    for _, fn in backends:
        fn(perm.values.copy(), np.ones(grid.shape), grid.hx, grid.hy, 1e-10, 50_000)

    print(f"{'grid':>8s} {'iters':>6s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "  speedup")
    for nx in sizes:
        grid = Grid2D(nx, nx)
        perm = PermeabilityField(
            binarize(sample_grf(GRFConfig(grid), child_rng(1, nx)), 3.0, 12.0), 3.0, 12.0
        )
        g = np.ones(grid.shape)
        times = {}
        iters = 0
        for name, fn in backends:
            times[name], iters = time_backend(
                fn, np.ascontiguousarray(perm.values), g, grid.hx, grid.hy, args.repeats
            )
        row = f"{nx:>6d}^2 {iters:>6d} " + " ".join(
            f"{times[name] * 1e3:>10.2f}ms" for name, _ in backends
        )
        if len(times) == 2:
            row += f"  {times['numpy'] / times['numba']:.1f}x"
        print(row)


if __name__ == "__main__":
    main()
