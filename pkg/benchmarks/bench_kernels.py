"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from llab import _kernels
from llab.grid import build_grid, partition
from llab.landscape import solve_landscape
from llab.operator import DiscreteOperator
from llab.potential import Uniform01, anderson_realization


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    g1 = build_grid(1, 4096, 8)
    g2 = build_grid(2, 128, 8)
    f1, V1 = rng.standard_normal(g1.shape), rng.random(g1.shape)
    f2, V2 = rng.standard_normal(g2.shape), rng.random(g2.shape)
    part = partition(g2, 4.0)
    w = rng.integers(0, 50, size=g2.shape).astype(float)
    op = DiscreteOperator(g1, anderson_realization(g1, Uniform01(), 0))
    return [
        ("stencil 1D, 32768 pts", lambda: _kernels.stencil_apply(f1, V1, 64.0)),
        ("stencil 2D, 1024^2 pts", lambda: _kernels.stencil_apply(f2, V2, 64.0)),
        ("cube min, 2D 1024^2", lambda: _kernels.segment_reduce(f2, part.labels, part.cube_count, "min")),
        ("plateau minima, 2D 1024^2", lambda: _kernels.plateau_minima(w, w.shape)),
        ("CG landscape, 1D 32768 pts", lambda: solve_landscape(op)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for name, fn in cases():
        t = {}
        for b in ("numpy", "numba"):
            _kernels.set_backend(b)
            t[b] = best_of(fn, args.repeat)
        rows.append((name, t["numpy"], t["numba"]))
    print(f"{'kernel':<30}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, a, b in rows:
        print(f"{name:<30}{1e3 * a:>12.2f}{1e3 * b:>12.2f}{a / b:>9.1f}x")


if __name__ == "__main__":
    main()
