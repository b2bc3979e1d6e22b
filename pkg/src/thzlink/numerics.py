"""Deterministic complex-valued kernels the rest of the simulator builds on:
DFTs of vector sequences, circular convolution of matrix-tap sequences,
SVD, Hermitian solves and seeded complex Gaussian sampling.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import (ConvergenceFailure, LengthMismatch, NotPositiveDefinite,
                     ShapeMismatch)


def dft_sequence(seq: np.ndarray, length: int) -> np.ndarray:
    """Forward DFT of a vector sequence along its first axis.

    out[p, q] = sum_n seq[n, q] exp(-2j pi n p / K).  Unnormalized forward;
    :func:`idft_sequence` carries the 1/K factor so the pair round-trips.
    """
    seq = np.asarray(seq)
    if seq.shape[0] != length:
        raise LengthMismatch(f"expected {length} elements, got {seq.shape[0]}")
    return np.fft.fft(seq, axis=0)


def idft_sequence(seq: np.ndarray, length: int) -> np.ndarray:
    seq = np.asarray(seq)
    if seq.shape[0] != length:
        raise LengthMismatch(f"expected {length} elements, got {seq.shape[0]}")
    return np.fft.ifft(seq, axis=0)


def circular_convolve(h_seq: np.ndarray, x_seq: np.ndarray, length: int) -> np.ndarray:
    """Length-K circular convolution r(n) = sum_l H(l) x((n-l) mod K).

    h_seq: K matrix taps of identical shape (K, m, n); x_seq: K vectors
    (K, n).  Noise, if any, is the caller's business.
    """
    h_seq = np.asarray(h_seq, dtype=np.complex128)
    x_seq = np.asarray(x_seq, dtype=np.complex128)
    if h_seq.ndim != 3 or x_seq.ndim != 2:
        raise ShapeMismatch("need (K, m, n) taps and (K, n) vectors")
    if h_seq.shape[0] != length or x_seq.shape[0] != length:
        raise LengthMismatch(f"both sequences must have {length} elements")
    if h_seq.shape[2] != x_seq.shape[1]:
        raise ShapeMismatch(
            f"tap columns {h_seq.shape[2]} != vector length {x_seq.shape[1]}")
    return _kernels.circular_convolve_seq(h_seq, x_seq)


def svd(a: np.ndarray):
    """Full-matrix-free SVD: returns (U, s, V) with a = U diag(s) V^H,
    singular values nonincreasing and U/V having orthonormal columns."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("SVD input contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return u, s, vh.conj().T


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for Hermitian positive definite A (Cholesky-checked)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch("A must be square")
    if b.shape[0] != a.shape[0]:
        raise ShapeMismatch("row count of B must match A")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    return np.linalg.solve(a, b)


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples: independent real/imag parts of variance/2 each."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def trial_rng(seed: int, *stream_key: int) -> np.random.Generator:
    """Independent generator for one (seed, sweep-point, trial, ...) tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream_key)]))
