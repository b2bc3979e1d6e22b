"""Evaluation quantities: per-bin effective noise covariance, sum spectral
efficiency of the linearized receiver, and array-gain sweeps used to
visualize beam squint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import array_response, subcarrier_frequencies
from .config import SystemConfig
from .errors import ShapeMismatch, SingularNoise
from .stage2 import apply_ttd


@dataclass
class RatePoint:
    """One aggregated sweep sample."""
    snr_db: float
    scheme: str
    se_mean: float          # bits/s/Hz
    se_std: float
    trials: int
    adc_bits: object = None
    pulse_shape: str | None = None

    @property
    def rate_bps(self) -> float:
        return self.se_mean  # scaled by bandwidth at the harness layer


def effective_noise_cov_per_bin(w_bb_k: np.ndarray, c: np.ndarray) -> np.ndarray:
    """W_bb^H C W_bb for one bin."""
    if w_bb_k.shape[0] != c.shape[0]:
        raise ShapeMismatch("baseband rows must match noise covariance size")
    return w_bb_k.conj().T @ c @ w_bb_k


def stacked_precoders(precoders, k_len: int) -> np.ndarray:
    """(K, N_T, N_s) per-bin effective transmit matrix, users on the block
    diagonal."""
    n_t = sum(p.rf.shape[-2] for p in precoders)
    n_s = sum(p.baseband.shape[-1] for p in precoders)
    out = np.zeros((k_len, n_t, n_s), dtype=np.complex128)
    row = col = 0
    for p in precoders:
        rf = p.rf if p.rf.ndim == 3 else p.rf[None, :, :]
        bb = p.baseband if p.baseband.ndim == 3 else p.baseband[None, :, :]
        eff = np.matmul(rf, bb)
        out[:, row:row + eff.shape[1], col:col + eff.shape[2]] = eff
        row += eff.shape[1]
        col += eff.shape[2]
    return out


def sum_spectral_efficiency(channel, precoders, combiner, qmodel,
                            cfg: SystemConfig) -> float:
    """Bin-averaged log-det spectral efficiency of all users.

    Per bin: SE_k = log2 | I + (1/N_s) Ct^-1 S | with S the combined signal
    Gram and Ct the combined effective noise covariance.  Evaluated in the
    Cholesky-whitened form, which keeps the argument Hermitian PD; all bins
    are processed as one stacked batch.
    """
    h_mu = channel.mu_freq
    k_len = cfg.num_bins
    n_s = cfg.total_streams
    xi = qmodel.xi

    f_all = stacked_precoders(precoders, k_len)
    w_rf = combiner.rf if combiner.rf.ndim == 3 else combiner.rf[None, :, :]
    w_bb = combiner.baseband
    w_full = np.matmul(w_rf, w_bb)                        # (K, N_BS, N_s)
    c_tilde = np.matmul(w_bb.conj().swapaxes(1, 2),
                        np.matmul(qmodel.c, w_bb))        # (K, N_s, N_s)
    try:
        chol = np.linalg.cholesky(c_tilde)
    except np.linalg.LinAlgError as exc:
        raise SingularNoise("effective noise covariance singular") from exc
    g = xi * np.matmul(w_full.conj().swapaxes(1, 2), np.matmul(h_mu, f_all))
    white = np.linalg.solve(chol, g)
    inner = (np.eye(n_s)
             + np.matmul(white, white.conj().swapaxes(1, 2)) / n_s)
    try:
        chol2 = np.linalg.cholesky(inner)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - PSD by form
        raise SingularNoise("whitened signal Gram not positive definite") from exc
    diags = np.real(np.diagonal(chol2, axis1=1, axis2=2))
    return float(2.0 * np.sum(np.log2(diags)) / k_len)


def beam_per_bin(block: np.ndarray, theta_sine: float, cfg: SystemConfig,
                 compensated: bool) -> np.ndarray:
    """(K, n) per-bin beams for one subarray: the flat beam repeated, or its
    delay-compensated version."""
    freqs = subcarrier_frequencies(cfg)
    if not compensated:
        return np.tile(block, (cfg.num_bins, 1))
    return np.stack([
        apply_ttd(block, theta_sine, f, cfg.carrier_freq_hz, cfg.ttd_per_chain)
        for f in freqs])


def nag_sweep(block: np.ndarray, theta_sine: float, cfg: SystemConfig,
              directions: np.ndarray, bins: np.ndarray,
              compensated: bool) -> np.ndarray:
    """Normalized array gain over (bin, direction) for one subarray beam.

    directions are sine-space steering parameters in [-1, 1]; bins are
    1-based subcarrier indices.  Returns (len(bins), len(directions)).
    """
    freqs = subcarrier_frequencies(cfg)
    beams = beam_per_bin(block, theta_sine, cfg, compensated)
    n = len(block)
    out = np.empty((len(bins), len(directions)))
    thetas = np.arcsin(np.asarray(directions))
    for row, k in enumerate(np.asarray(bins, dtype=int)):
        f = freqs[k - 1]
        resp = np.stack([array_response(n, th, f, cfg.carrier_freq_hz)
                         for th in thetas])
        out[row] = np.abs(resp.conj() @ beams[k - 1])
    return out
