#!/usr/bin/env python3
"""Timing comparison of the numba kernels against their NumPy fallbacks.

Run: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from thzlink import _kernels


def timeit(fn, *args, repeats=5):
    fn(*args)  # warm-up / JIT
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_convolution(repeats):
    rng = np.random.default_rng(0)
    print("circular convolution (K matrix taps x K vectors):")
    print(f"  {'K':>4} {'m':>4} {'n':>4} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for k_len, m, n in ((16, 8, 4), (64, 32, 8), (128, 96, 16)):
        h = (rng.standard_normal((k_len, m, n))
             + 1j * rng.standard_normal((k_len, m, n)))
        x = (rng.standard_normal((k_len, n))
             + 1j * rng.standard_normal((k_len, n)))
        t_np = timeit(_kernels.circular_convolve_seq_numpy, h, x, repeats=repeats)
        if _kernels.HAVE_NUMBA:
            t_nb = timeit(_kernels.circular_convolve_seq_numba, h, x,
                          repeats=repeats)
            ref = _kernels.circular_convolve_seq_numpy(h, x)
            out = _kernels.circular_convolve_seq_numba(h, x)
            assert np.allclose(ref, out, atol=1e-10)
            print(f"  {k_len:>4} {m:>4} {n:>4} {t_np * 1e3:>9.2f}ms "
                  f"{t_nb * 1e3:>9.2f}ms {t_np / t_nb:>7.1f}x")
        else:
            print(f"  {k_len:>4} {m:>4} {n:>4} {t_np * 1e3:>9.2f}ms "
                  f"{'n/a':>10} {'':>8}")


def bench_codebook(repeats):
    rng = np.random.default_rng(1)
    from thzlink.quantization import lloyd_max_codebook
    levels, bounds = lloyd_max_codebook(3)
    print("scalar codebook application:")
    print(f"  {'samples':>9} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for size in (10_000, 1_000_000, 4_000_000):
        vals = rng.standard_normal(size)
        t_np = timeit(_kernels.apply_scalar_codebook_numpy, vals, bounds,
                      levels, repeats=repeats)
        if _kernels.HAVE_NUMBA:
            t_nb = timeit(_kernels.apply_scalar_codebook_numba, vals, bounds,
                          levels, repeats=repeats)
            assert np.array_equal(
                _kernels.apply_scalar_codebook_numpy(vals, bounds, levels),
                _kernels.apply_scalar_codebook_numba(vals, bounds, levels))
            print(f"  {size:>9} {t_np * 1e3:>9.2f}ms {t_nb * 1e3:>9.2f}ms "
                  f"{t_np / t_nb:>7.1f}x")
        else:
            print(f"  {size:>9} {t_np * 1e3:>9.2f}ms {'n/a':>10}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    backend = "numba" if _kernels.HAVE_NUMBA else "numpy (fallback)"
    print(f"active backend: {backend}\n")
    bench_convolution(args.repeats)
    print()
    bench_codebook(args.repeats)


if __name__ == "__main__":
    main()
