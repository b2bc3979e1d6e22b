"""Hot inner loops, JIT-compiled with numba when available.

The pure-NumPy implementations are always importable; the dispatched names
(`circular_convolve_seq`, `apply_scalar_codebook`) point at the numba build
unless the environment variable ``THZLINK_NUMBA=0`` is set or numba cannot
be imported.  ``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("THZLINK_NUMBA", "1").lower() not in ("0", "false", "no")


# -- pure NumPy reference implementations -----------------------------------

def circular_convolve_seq_numpy(h_seq: np.ndarray, x_seq: np.ndarray) -> np.ndarray:
    """r(n) = sum_l H(l) @ x((n - l) mod K) for K matrix taps and K vectors.

    h_seq: (K, m, n) complex, x_seq: (K, n) complex -> (K, m) complex.
    """
    K = h_seq.shape[0]
    shift = (np.arange(K)[:, None] - np.arange(K)[None, :]) % K  # [n, l] -> n-l
    return np.einsum("lij,nlj->ni", h_seq, x_seq[shift])


def apply_scalar_codebook_numpy(values: np.ndarray, boundaries: np.ndarray,
                                levels: np.ndarray) -> np.ndarray:
    """Map each real value to its quantizer level (decision boundaries sorted)."""
    return levels[np.searchsorted(boundaries, values, side="right")]


# -- numba builds ------------------------------------------------------------

HAVE_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - environment without numba
        HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def _circ_conv_nb(h_seq, x_seq, out):
        K, m, n = h_seq.shape
        for t in range(K):
            for l in range(K):
                s = (t - l) % K
                for i in range(m):
                    acc = 0.0 + 0.0j
                    for j in range(n):
                        acc += h_seq[l, i, j] * x_seq[s, j]
                    out[t, i] += acc

    def circular_convolve_seq_numba(h_seq: np.ndarray, x_seq: np.ndarray) -> np.ndarray:
        out = np.zeros((h_seq.shape[0], h_seq.shape[1]), dtype=np.complex128)
        _circ_conv_nb(np.ascontiguousarray(h_seq, dtype=np.complex128),
                      np.ascontiguousarray(x_seq, dtype=np.complex128), out)
        return out

    @njit(cache=True)
    def _codebook_nb(values, boundaries, levels):
        out = np.empty_like(values)
        flat = values.ravel()
        res = out.ravel()
        nb = boundaries.shape[0]
        for i in range(flat.shape[0]):
            v = flat[i]
            lo, hi = 0, nb
            while lo < hi:
                mid = (lo + hi) // 2
                if boundaries[mid] <= v:
                    lo = mid + 1
                else:
                    hi = mid
            res[i] = levels[lo]
        return out

    def apply_scalar_codebook_numba(values: np.ndarray, boundaries: np.ndarray,
                                    levels: np.ndarray) -> np.ndarray:
        return _codebook_nb(np.ascontiguousarray(values, dtype=np.float64),
                            np.ascontiguousarray(boundaries, dtype=np.float64),
                            np.ascontiguousarray(levels, dtype=np.float64))

    circular_convolve_seq = circular_convolve_seq_numba
    apply_scalar_codebook = apply_scalar_codebook_numba
else:
    circular_convolve_seq = circular_convolve_seq_numpy
    apply_scalar_codebook = apply_scalar_codebook_numpy
