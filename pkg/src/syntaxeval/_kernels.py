"""Hot numeric kernels with numba JIT and pure-numpy fallbacks.

Set SYNTAXEVAL_DISABLE_NUMBA=1 to force the numpy path (also used when numba
is not importable). Two kernels dominate runtime: the edit-distance DP that
scores every prediction, and the bootstrap accumulation that sums per-cluster
weighted outcomes for each of the 500 resamples.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("SYNTAXEVAL_DISABLE_NUMBA", "").lower() in ("1", "true", "yes", "on")


def _levenshtein_impl(a, b):
    n = a.shape[0]
    m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for i in range(n):
        cur[0] = i + 1
        ai = a[i]
        for j in range(m):
            cost = 0 if ai == b[j] else 1
            best = prev[j] + cost
            if prev[j + 1] + 1 < best:
                best = prev[j + 1] + 1
            if cur[j] + 1 < best:
                best = cur[j] + 1
            cur[j + 1] = best
        prev, cur = cur, prev
    return prev[m]


def _bootstrap_sums_impl(agg, draws, out):
    n_res = draws.shape[0]
    n_clusters = draws.shape[1]
    for r in range(n_res):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        for c in range(n_clusters):
            idx = draws[r, c]
            s0 += agg[idx, 0]
            s1 += agg[idx, 1]
            s2 += agg[idx, 2]
            s3 += agg[idx, 3]
        out[r, 0] = s0
        out[r, 1] = s1
        out[r, 2] = s2
        out[r, 3] = s3


NUMBA_ENABLED = False
if not _DISABLE:
    try:
        from numba import njit

        _levenshtein_jit = njit(cache=True, nogil=True)(_levenshtein_impl)
        _bootstrap_sums_jit = njit(cache=True, nogil=True)(_bootstrap_sums_impl)
        NUMBA_ENABLED = True
    except ImportError:
        pass


def _levenshtein_numpy(a: np.ndarray, b: np.ndarray) -> int:
    n, m = a.shape[0], b.shape[0]
    if n == 0:
        return int(m)
    if m == 0:
        return int(n)
    idx = np.arange(m + 1, dtype=np.int64)
    prev = idx.copy()
    cur = np.empty(m + 1, dtype=np.int64)
    for i in range(n):
        cur[0] = i + 1
        sub = prev[:-1] + (b != a[i])
        cur[1:] = np.minimum(sub, prev[1:] + 1)
        # cur[j] = min(cur[j], cur[j-1]+1) resolved as a prefix min:
        # min over k<=j of (cur[k] + j - k) = j + cummin(cur - k)
        cur = np.minimum.accumulate(cur - idx) + idx
        prev, cur = cur, prev
    return int(prev[m])


def _bootstrap_sums_numpy(agg: np.ndarray, draws: np.ndarray, out: np.ndarray) -> None:
    np.sum(agg[draws], axis=1, out=out)


def levenshtein_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Unit-cost edit distance between two int-coded label sequences."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if NUMBA_ENABLED:
        return int(_levenshtein_jit(a, b))
    return _levenshtein_numpy(a, b)


def bootstrap_sums(agg: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Per-resample totals of per-cluster aggregates.

    agg: (n_clusters, 4) float64 rows [w*y | T=1, w | T=1, w*y | T=0, w | T=0].
    draws: (n_resamples, n_clusters) int64 cluster indices with replacement.
    Returns (n_resamples, 4) sums.
    """
    agg = np.ascontiguousarray(agg, dtype=np.float64)
    draws = np.ascontiguousarray(draws, dtype=np.int64)
    out = np.empty((draws.shape[0], 4), dtype=np.float64)
    if NUMBA_ENABLED:
        _bootstrap_sums_jit(agg, draws, out)
    else:
        _bootstrap_sums_numpy(agg, draws, out)
    return out
