"""Time the compiled and pure-numpy kernel flavors side by side.

Run with ``python benchmarks/bench_kernels.py``.  Both flavors are always
imported directly, so the ``JUMPLAB_NO_NUMBA`` dispatch flag does not
matter here; a warm-up call excludes JIT compilation from the timings.
"""

import time

import numpy as np

from jumplab import kernels


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (JIT compile for the numba flavor)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_touch_counts(rng, n_frames=2000, sprites_per_frame=24, n_keys=24):
    n = n_frames * sprites_per_frame
    x = rng.integers(0, 248, n)
    y = rng.integers(0, 232, n)
    w = np.full(n, 8, np.int64)
    h = np.full(n, 8, np.int64)
    kid = rng.integers(0, n_keys, n)
    starts = np.arange(n_frames + 1, dtype=np.int64) * sprites_per_frame
    args = (x, y, w, h, kid, starts, n_keys)

    t_numba = _time(kernels.touch_counts_numba, *args)
    t_numpy = _time(kernels.touch_counts_numpy, *args)
    a = kernels.touch_counts_numba(*args)
    b = kernels.touch_counts_numpy(*args)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    return t_numba, t_numpy


def bench_kmeans_assign(rng, n_points=5000, n_dims=11, k=8):
    points = rng.normal(size=(n_points, n_dims))
    centers = rng.normal(size=(k, n_dims))
    args = (points, centers)

    t_numba = _time(kernels.kmeans_assign_numba, *args)
    t_numpy = _time(kernels.kmeans_assign_numpy, *args)
    la, wa = kernels.kmeans_assign_numba(*args)
    lb, wb = kernels.kmeans_assign_numpy(*args)
    assert np.array_equal(la, lb) and abs(wa - wb) < 1e-6 * max(1.0, wb)
    return t_numba, t_numpy


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, fn in (("touch_counts", bench_touch_counts),
                     ("kmeans_assign", bench_kmeans_assign)):
        t_numba, t_numpy = fn(rng)
        print(f"{name:<16} {t_numba * 1e3:>8.2f}ms {t_numpy * 1e3:>8.2f}ms "
              f"{t_numpy / t_numba:>7.1f}x")


if __name__ == "__main__":
    main()
