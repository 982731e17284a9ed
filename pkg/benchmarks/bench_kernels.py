"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py
The numpy column is what you get with SYNTAXEVAL_DISABLE_NUMBA=1.
"""

import time

import numpy as np

from syntaxeval._kernels import (
    NUMBA_ENABLED,
    _bootstrap_sums_numpy,
    _levenshtein_numpy,
    bootstrap_sums,
    levenshtein_distance,
)


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_levenshtein(rng, n_pairs=2000, length=60):
    pairs = [
        (rng.integers(0, 30, size=length).astype(np.int64), rng.integers(0, 30, size=length).astype(np.int64))
        for _ in range(n_pairs)
    ]
    levenshtein_distance(pairs[0][0], pairs[0][1])  # warm the JIT

    def jit_path():
        for a, b in pairs:
            levenshtein_distance(a, b)

    def numpy_path():
        for a, b in pairs:
            _levenshtein_numpy(a, b)

    return timeit(jit_path), timeit(numpy_path)


def bench_bootstrap(rng, n_clusters=2000, resamples=500):
    agg = rng.normal(size=(n_clusters, 4))
    draws = rng.integers(0, n_clusters, size=(resamples, n_clusters))
    out = np.empty((resamples, 4))
    bootstrap_sums(agg, draws)  # warm the JIT

    def jit_path():
        bootstrap_sums(agg, draws)

    def numpy_path():
        _bootstrap_sums_numpy(
            np.ascontiguousarray(agg), np.ascontiguousarray(draws, dtype=np.int64), out
        )

    return timeit(jit_path), timeit(numpy_path)


def main():
    rng = np.random.default_rng(0)
    print(f"numba enabled: {NUMBA_ENABLED}")
    print(f"{'kernel':<28}{'dispatch':>12}{'numpy':>12}{'speedup':>10}")
    for name, (jit_s, np_s) in (
        ("levenshtein 2000x60x60", bench_levenshtein(rng)),
        ("bootstrap 500x2000", bench_bootstrap(rng)),
    ):
        print(f"{name:<28}{jit_s * 1e3:>10.1f}ms{np_s * 1e3:>10.1f}ms{np_s / jit_s:>9.1f}x")


if __name__ == "__main__":
    main()
