#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels (bit sampling, leading-ones scoring, parent
ones-counting) and a full engine iteration on representative population
shapes, then prints per-kernel speedups.  Run directly:

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from umda_lab import kernels

SHAPES = [
    (200, 100),   # low-pressure default
    (240, 100),   # high-pressure default
    (320, 500),   # largest scaling point
    (67, 400),    # noisy scaling point
]


def _time(fn, *args, repeats):
    fn(*args)  # warm-up / JIT
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def bench_shape(lam, n, repeats):
    rng = np.random.default_rng(0)
    uniforms = rng.random((lam, n))
    marginals = rng.uniform(0.05, 0.95, size=n)
    mu_rows = np.arange(lam // 10 or 1)

    rows = []
    pairs = [
        ("sample_bits", kernels._sample_bits_np, getattr(kernels, "_sample_bits_nb", None),
         (uniforms, marginals)),
    ]
    bits = kernels._sample_bits_np(uniforms, marginals)
    pairs.append(("leading_ones", kernels._leading_ones_rows_np,
                  getattr(kernels, "_leading_ones_rows_nb", None), (bits,)))
    pairs.append(("ones_counts", kernels._column_ones_counts_np,
                  getattr(kernels, "_column_ones_counts_nb", None), (bits, mu_rows)))
    for name, np_fn, nb_fn, args in pairs:
        t_np = _time(np_fn, *args, repeats=repeats)
        t_nb = _time(nb_fn, *args, repeats=repeats) if nb_fn is not None else None
        rows.append((name, t_np, t_nb))
    return rows


def bench_engine(repeats=3):
    from umda_lab import UmdaConfig, run

    config = UmdaConfig(n=200, lam=135, mu=27, seed=1, record_trace=False)
    start = time.perf_counter()
    for _ in range(repeats):
        run(config)
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    print(f"active backend: {kernels.BACKEND} (numba available: {kernels.NUMBA_AVAILABLE})")
    print(f"{'shape':>12} {'kernel':>14} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for lam, n in SHAPES:
        for name, t_np, t_nb in bench_shape(lam, n, args.repeats):
            numba_col = f"{t_nb * 1e6:10.1f}" if t_nb is not None else "       n/a"
            speedup = f"{t_np / t_nb:7.1f}x" if t_nb else "     n/a"
            print(f"{f'{lam}x{n}':>12} {name:>14} {t_np * 1e6:10.1f} {numba_col} {speedup}")
    per_run = bench_engine()
    print(f"full engine run (n=200, lambda=135, active backend): {per_run * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
