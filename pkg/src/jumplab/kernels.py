"""Hot numeric kernels, numba-compiled when available.

Every kernel ships in two flavors with identical signatures and results:
``*_numba`` (compiled with ``@njit``) and ``*_numpy`` (vectorized numpy).
The dispatched names (``touch_counts``, ``kmeans_assign``, ...) pick the
compiled flavor unless ``JUMPLAB_NO_NUMBA`` is set in the environment or
numba is not importable.  ``benchmarks/bench_kernels.py`` times both.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("JUMPLAB_NO_NUMBA", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        # identity decorator, tolerating both @njit and @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# co-occurrence accumulation
#
# Frames are flattened: sprite i of the whole log lives at index
# starts[f] .. starts[f+1] for its frame f.  kid maps each sprite instance
# to a dense key index.  Returns per-key on-screen frame counts and the
# symmetric per-pair touching frame counts (counted once per frame).
# ---------------------------------------------------------------------------

def _touch_counts_loop(x, y, w, h, kid, starts, n_keys):
    on = np.zeros(n_keys, np.int64)
    touch = np.zeros((n_keys, n_keys), np.int64)
    seen = np.zeros(n_keys, np.bool_)
    pair = np.zeros((n_keys, n_keys), np.bool_)
    for f in range(starts.shape[0] - 1):
        lo = starts[f]
        hi = starts[f + 1]
        for i in range(lo, hi):
            ki = kid[i]
            if not seen[ki]:
                seen[ki] = True
                on[ki] += 1
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                ka = kid[i]
                kb = kid[j]
                if pair[ka, kb] and pair[kb, ka]:
                    continue
                if (x[i] <= x[j] + w[j] and x[j] <= x[i] + w[i]
                        and y[i] <= y[j] + h[j] and y[j] <= y[i] + h[i]):
                    if not pair[ka, kb]:
                        pair[ka, kb] = True
                        pair[kb, ka] = True
                        touch[ka, kb] += 1
                        if ka != kb:
                            touch[kb, ka] += 1
        for i in range(lo, hi):
            seen[kid[i]] = False
            for j in range(lo, hi):
                pair[kid[i], kid[j]] = False
    return on, touch


touch_counts_numba = njit(cache=True)(_touch_counts_loop)


def touch_counts_numpy(x, y, w, h, kid, starts, n_keys):
    on = np.zeros(n_keys, np.int64)
    touch = np.zeros((n_keys, n_keys), np.int64)
    for f in range(starts.shape[0] - 1):
        sl = slice(starts[f], starts[f + 1])
        fx, fy, fw, fh, fk = x[sl], y[sl], w[sl], h[sl], kid[sl]
        if fk.size == 0:
            continue
        on[np.unique(fk)] += 1
        ov = ((fx[:, None] <= fx[None, :] + fw[None, :])
              & (fx[None, :] <= fx[:, None] + fw[:, None])
              & (fy[:, None] <= fy[None, :] + fh[None, :])
              & (fy[None, :] <= fy[:, None] + fh[:, None]))
        ii, jj = np.nonzero(np.triu(ov, 1))
        if ii.size:
            pm = np.zeros((n_keys, n_keys), np.bool_)
            pm[fk[ii], fk[jj]] = True
            pm |= pm.T
            touch += pm
    return on, touch


# ---------------------------------------------------------------------------
# k-means inner loops
# ---------------------------------------------------------------------------

def _kmeans_assign_loop(points, centers):
    n = points.shape[0]
    k = centers.shape[0]
    d = points.shape[1]
    labels = np.zeros(n, np.int64)
    wcss = 0.0
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(k):
            s = 0.0
            for j in range(d):
                diff = points[i, j] - centers[c, j]
                s += diff * diff
            if s < best:
                best = s
                arg = c
        labels[i] = arg
        wcss += best
    return labels, wcss


kmeans_assign_numba = njit(cache=True)(_kmeans_assign_loop)


def kmeans_assign_numpy(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    wcss = float(d2[np.arange(points.shape[0]), labels].sum())
    return labels.astype(np.int64), wcss


if USE_NUMBA:
    touch_counts = touch_counts_numba
    kmeans_assign = kmeans_assign_numba
else:
    touch_counts = touch_counts_numpy
    kmeans_assign = kmeans_assign_numpy
