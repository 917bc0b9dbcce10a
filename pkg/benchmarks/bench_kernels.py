"""Compare the numba and numpy variants of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Both variants are checked for agreement before timing. The first numba call
is made outside the timed region so JIT compilation is not counted.
"""
import argparse
import time

import numpy as np

from geolink import kernels


def _ring(n, rng):
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.5, 1.0, n)
    xy = np.c_[r * np.cos(ang), r * np.sin(ang)]
    return np.vstack([xy, xy[:1]])


def cases(rng):
    ring = _ring(256, rng)
    pts = rng.uniform(-1.1, 1.1, (20000, 2))
    starts = np.array([0, len(ring)])
    yield ("locate_points", "20k points x 256-gon",
           (pts[:, 0], pts[:, 1], ring[:, 0], ring[:, 1], starts))

    src = rng.normal(size=(50000, 32))
    idx = rng.integers(0, 1000, 50000)
    yield "scatter_add_rows", "50k x 32 into 1000 rows", (src, idx, 1000)

    vals = rng.normal(size=200000)
    seg = rng.integers(0, 5000, 200000)
    yield "segment_max", "200k values, 5000 segments", (vals, seg, 5000)

    tri = rng.uniform(0, 1, (100000, 3, 2))
    yield "incircle", "100k triangles", (tri, np.array([0.5, 0.5]))


def bench(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'workload':<30}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, desc, a in cases(rng):
        f_np = getattr(kernels, f"{name}_numpy")
        f_nb = getattr(kernels, f"{name}_numba")
        np.testing.assert_allclose(f_np(*a), f_nb(*a), rtol=1e-12, atol=1e-12)
        t_np = bench(f_np, a, args.repeat)
        t_nb = bench(f_nb, a, args.repeat)
        print(f"{name:<18}{desc:<30}{t_np * 1e3:>10.2f}{t_nb * 1e3:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
