"""Low-resolution ADC model.

A Lloyd-Max scalar quantizer (levels matched to a unit-variance Gaussian)
provides both the actual quantization operator and, through its minimum
distortion, the linear-gain decomposition used everywhere else: the
quantized output is modeled as a scalar gain xi = 1 - rho times the input
plus uncorrelated distortion noise.  The distortion covariance R and the
effective combined-noise covariance C follow from the pre-ADC signal
statistics.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import ndtr
from scipy.stats import norm

from .config import IDEAL, AdcBits, SystemConfig
from . import _kernels
from .errors import ShapeMismatch, UnsupportedResolution

logger = logging.getLogger(__name__)

MAX_BITS = 12

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _phi(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _cell_stats(levels: np.ndarray):
    """Per-cell pdf/cdf terms for the current decision boundaries."""
    t = 0.5 * (levels[:-1] + levels[1:])
    pdf_l = np.concatenate(([0.0], _phi(t)))
    pdf_r = np.concatenate((_phi(t), [0.0]))
    cdf_l = np.concatenate(([0.0], ndtr(t)))
    cdf_r = np.concatenate((ndtr(t), [1.0]))
    return t, pdf_l, pdf_r, cdf_r - cdf_l


@functools.lru_cache(maxsize=None)
def lloyd_max_codebook(bits: int) -> tuple[np.ndarray, np.ndarray]:
    """MMSE scalar quantizer for a unit-variance Gaussian input.

    Returns (levels, boundaries), boundaries being the midpoints between
    adjacent levels.  Solved by Newton iteration on the centroid fixed
    point (tridiagonal Jacobian); stops at a 1e-12 step or at the floating
    point limit of the centroid formula, whichever comes first.
    """
    if not isinstance(bits, int) or isinstance(bits, bool) or bits < 1:
        raise UnsupportedResolution(f"bit depth must be a positive integer, got {bits!r}")
    if bits > MAX_BITS:
        raise UnsupportedResolution(f"bit depth {bits} above supported maximum {MAX_BITS}")
    n = 2 ** bits
    c = norm.ppf((np.arange(n) + 0.5) / n)
    last_step = np.inf
    for _ in range(120):
        t, pdf_l, pdf_r, prob = _cell_stats(c)
        m = (pdf_l - pdf_r) / prob
        left = np.concatenate(([0.0], t))
        right = np.concatenate((t, [0.0]))
        dm_dl = np.where(pdf_l > 0, pdf_l * (m - left) / prob, 0.0)
        dm_dr = np.where(pdf_r > 0, pdf_r * (right - m) / prob, 0.0)
        band = np.zeros((3, n))
        band[0, 1:] = -0.5 * dm_dr[:-1]
        band[1, :] = 1.0 - 0.5 * (dm_dl + dm_dr)
        band[2, :-1] = -0.5 * dm_dl[1:]
        step = solve_banded((1, 1), band, c - m)
        c = c - step
        step_size = float(np.max(np.abs(step)))
        if step_size < 1e-12 or step_size >= last_step:
            break
        last_step = step_size
    boundaries = 0.5 * (c[:-1] + c[1:])
    return c, boundaries


@functools.lru_cache(maxsize=None)
def distortion_factor(bits: AdcBits) -> float:
    """Minimum normalized mean-square distortion of the b-bit quantizer for
    a unit-variance Gaussian input (0 for the ideal converter)."""
    if bits == IDEAL:
        return 0.0
    levels, bounds = lloyd_max_codebook(bits)
    t, pdf_l, pdf_r, prob = _cell_stats(levels)
    x_pdf_l = np.concatenate(([0.0], t * _phi(t)))
    x_pdf_r = np.concatenate((t * _phi(t), [0.0]))
    second_moment = prob + x_pdf_l - x_pdf_r          # int x^2 phi over cell
    cross = levels * (pdf_l - pdf_r)                  # c_i * int x phi
    return float(np.sum(second_moment - 2.0 * cross + levels ** 2 * prob))


def bussgang_gain(bits: AdcBits) -> float:
    return 1.0 - distortion_factor(bits)


def quantize(x: np.ndarray, bits: AdcBits) -> np.ndarray:
    """Quantize complex samples with the b-bit Lloyd-Max codebook.

    Real and imaginary parts are quantized independently after the whole
    vector (the last axis, per leading index) is scaled to unit
    per-component variance; the scale is undone on output.  All-zero
    vectors cannot be scaled and pass through as zeros.
    """
    x = np.asarray(x, dtype=np.complex128)
    if bits == IDEAL:
        return x.copy()
    levels, bounds = lloyd_max_codebook(bits)
    power = np.mean(np.abs(x) ** 2, axis=-1, keepdims=True)
    zero_rows = power == 0.0
    if np.any(zero_rows):
        logger.debug("quantize: %d all-zero vector(s) passed through",
                     int(np.count_nonzero(zero_rows)))
    scale = np.sqrt(power / 2.0, where=~zero_rows, out=np.ones_like(power))
    scaled = x / scale
    out = (_kernels.apply_scalar_codebook(scaled.real, bounds, levels)
           + 1j * _kernels.apply_scalar_codebook(scaled.imag, bounds, levels))
    out *= scale
    out[np.broadcast_to(zero_rows, out.shape)] = 0.0
    return out


# -- pre-ADC signal statistics ------------------------------------------------

def _effective_precoder(precoder, k: int) -> np.ndarray:
    rf = precoder.rf if precoder.rf.ndim == 2 else precoder.rf[k]
    bb = precoder.baseband if precoder.baseband.ndim == 2 else precoder.baseband[k]
    return rf @ bb


def signal_covariance(channel, precoders, cfg: SystemConfig) -> np.ndarray:
    """Antenna-domain covariance of the precoded signal through the taps:
    sum_u sum_n H_u(n) R_uu H_u(n)^H with R_uu the per-user transmit
    covariance.  Frequency-flat precoders use the tap-domain sum;
    per-bin precoders fall back to the equivalent bin average.
    """
    per_bin = any(p.rf.ndim == 3 or p.baseband.ndim == 3 for p in precoders)
    if per_bin:
        return signal_covariance_per_bin(channel, precoders, cfg).mean(axis=0)
    n_bs = cfg.bs_antennas
    out = np.zeros((n_bs, n_bs), dtype=np.complex128)
    for u, prec in enumerate(precoders):
        f = prec.rf @ prec.baseband
        r_uu = cfg.symbol_variance * (f @ f.conj().T)
        if channel.taps[u].shape[2] != f.shape[0]:
            raise ShapeMismatch("precoder rows do not match channel columns")
        taps = channel.taps[u]
        # sum_n H(n) R H(n)^H, batched over taps
        weighted = np.matmul(taps, r_uu)
        out += np.tensordot(weighted, taps.conj(), axes=([0, 2], [0, 2]))
    return out


def signal_covariance_per_bin(channel, precoders, cfg: SystemConfig) -> np.ndarray:
    """(K, N_BS, N_BS) per-bin transmit-plus-channel covariance stack."""
    n_bs = cfg.bs_antennas
    out = np.zeros((cfg.num_bins, n_bs, n_bs), dtype=np.complex128)
    for u, prec in enumerate(precoders):
        rf = prec.rf if prec.rf.ndim == 3 else prec.rf[None, :, :]
        bb = prec.baseband if prec.baseband.ndim == 3 else prec.baseband[None, :, :]
        hf = np.matmul(channel.freq[u], np.matmul(rf, bb))
        out += cfg.symbol_variance * np.matmul(hf, hf.conj().swapaxes(1, 2))
    return out


def noise_covariances(w_rf: np.ndarray, qtilde: np.ndarray, xi: float,
                      noise_var: float) -> tuple[np.ndarray, np.ndarray]:
    """Distortion covariance R and effective combined-noise covariance C.

    R = xi (1 - xi) diag(W^H Qt W + s2 W^H W); C = xi^2 s2 W^H W + R.
    A per-bin analog combiner (3-D w_rf) averages the per-chain input power
    over bins, which is what the time-domain converter actually sees.
    """
    w_rf = np.asarray(w_rf)
    if w_rf.ndim == 2:
        gram = w_rf.conj().T @ w_rf
        sig = w_rf.conj().T @ qtilde @ w_rf
    elif w_rf.ndim == 3:
        wh = w_rf.conj().swapaxes(1, 2)
        gram = np.matmul(wh, w_rf).mean(axis=0)
        sig = np.matmul(wh, np.matmul(qtilde, w_rf)).mean(axis=0)
    else:
        raise ShapeMismatch("w_rf must be 2-D or (K, N, M)")
    r = xi * (1.0 - xi) * np.diag(np.real(np.diag(sig + noise_var * gram)))
    c = xi ** 2 * noise_var * gram + r
    return r, c


@dataclass
class QuantizationModel:
    """Everything the linearized receiver model needs for one bit depth."""
    bits: AdcBits
    rho: float
    xi: float
    qtilde: np.ndarray
    r: np.ndarray
    c: np.ndarray

    @property
    def gain_matrix(self) -> np.ndarray:
        return self.xi * np.eye(self.r.shape[0])


def build_quantization_model(channel, precoders, w_rf: np.ndarray,
                             cfg: SystemConfig,
                             bits: AdcBits | None = None,
                             noise_var: float | None = None) -> QuantizationModel:
    """Assemble the linearized ADC model for the given front end; bit depth
    and noise variance default to the config values."""
    bits = cfg.adc_bits if bits is None else bits
    noise_var = cfg.noise_variance if noise_var is None else noise_var
    rho = distortion_factor(bits)
    xi = 1.0 - rho
    w_rf = np.asarray(w_rf)
    per_bin = (w_rf.ndim == 3
               or any(p.rf.ndim == 3 or p.baseband.ndim == 3 for p in precoders))
    if per_bin:
        qtilde_k = signal_covariance_per_bin(channel, precoders, cfg)
        if w_rf.ndim == 2:
            w_rf = np.broadcast_to(w_rf, (cfg.num_bins,) + w_rf.shape)
        r, c = noise_covariances(w_rf, qtilde_k, xi, noise_var)
        qtilde = qtilde_k.mean(axis=0)
    else:
        qtilde = signal_covariance(channel, precoders, cfg)
        r, c = noise_covariances(w_rf, qtilde, xi, noise_var)
    return QuantizationModel(bits=bits, rho=rho, xi=xi, qtilde=qtilde, r=r, c=c)
