"""End-to-end time-domain simulation of the uplink block chain, used as an
independent check on the per-bin product model.

The direct method walks the physical order sample by sample: zero-padded
data blocks, circular convolution through the channel taps, antenna-level
AWGN, analog combining, the actual scalar quantizer, and a block FFT.  The
per-bin method produces the same signal through bin-wise products (their
agreement is itself one of the checks) and is cheap enough for
million-sample converter statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .channel import ChannelRealization
from .config import SystemConfig
from .numerics import circular_convolve, complex_gaussian
from .quantization import quantize


@dataclass
class OracleResult:
    data_bins: np.ndarray   # (blocks, K, N_s) transmitted symbols per bin
    pre_adc: np.ndarray     # (blocks, K, N_rf) combined time samples
    post_adc: np.ndarray    # (blocks, K, N_rf) after the converter
    rf_bins: np.ndarray     # (blocks, K, N_rf) FFT of post_adc
    y_bins: np.ndarray      # (blocks, K, N_s) after per-bin baseband combining


def _data_blocks(cfg: SystemConfig, rng: np.random.Generator,
                 num_blocks: int) -> np.ndarray:
    """Zero-padded symbol blocks (blocks, K, N_s)."""
    b = np.zeros((num_blocks, cfg.num_bins, cfg.total_streams),
                 dtype=np.complex128)
    b[:, :cfg.data_block_len, :] = complex_gaussian(
        rng, (num_blocks, cfg.data_block_len, cfg.total_streams),
        cfg.symbol_variance)
    return b


def _tx_time_signal(precoders, block: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Per-antenna transmit sequence (K, N_T) for one symbol block."""
    cols = []
    offset = 0
    for prec in precoders:
        n_su = prec.baseband.shape[-1]
        b_u = block[:, offset:offset + n_su]
        offset += n_su
        if prec.rf.ndim == 2 and prec.baseband.ndim == 2:
            cols.append(b_u @ prec.effective().T)
        else:
            b_bins = np.fft.fft(b_u, axis=0)
            x_bins = np.stack([prec.effective(k) @ b_bins[k]
                               for k in range(cfg.num_bins)])
            cols.append(np.fft.ifft(x_bins, axis=0))
    return np.concatenate(cols, axis=1)


def time_domain_oracle(channel: ChannelRealization, precoders, combiner,
                       cfg: SystemConfig, rng: np.random.Generator,
                       num_blocks: int = 1, bits=None,
                       noiseless: bool = False,
                       method: str = "direct") -> OracleResult:
    """Simulate `num_blocks` blocks through the full receive chain.

    method="direct" runs the tap-domain circular convolution per block;
    method="per-bin" generates the identical signal from bin products and
    combined-domain noise (the analog Gram is the identity), which is the
    fast path for Monte-Carlo statistics.
    """
    bits = cfg.adc_bits if bits is None else bits
    noise_var = cfg.noise_variance
    k_len = cfg.num_bins
    blocks = _data_blocks(cfg, rng, num_blocks)
    data_bins = np.fft.fft(blocks, axis=1)

    w_rf = combiner.rf
    per_bin_rf = w_rf.ndim == 3
    if method == "direct":
        taps = channel.mu_taps
        pre = np.empty((num_blocks, k_len, w_rf.shape[-1]), dtype=np.complex128)
        for i in range(num_blocks):
            x_mu = _tx_time_signal(precoders, blocks[i], cfg)
            r = circular_convolve(taps, x_mu, k_len)
            if not noiseless:
                r = r + complex_gaussian(rng, r.shape, noise_var)
            if per_bin_rf:
                r_bins = np.fft.fft(r, axis=0)
                combined = np.stack([w_rf[k].conj().T @ r_bins[k]
                                     for k in range(k_len)])
                pre[i] = np.fft.ifft(combined, axis=0)
            else:
                pre[i] = r @ w_rf.conj()
    elif method == "per-bin":
        h_mu = channel.mu_freq
        gains = np.empty((k_len, w_rf.shape[-1], cfg.total_streams),
                         dtype=np.complex128)
        for k in range(k_len):
            f_k = block_diag(*[p.effective(k) for p in precoders])
            wk = w_rf[k] if per_bin_rf else w_rf
            gains[k] = wk.conj().T @ (h_mu[k] @ f_k)
        pre_bins = np.einsum("kij,nkj->nki", gains, data_bins)
        pre = np.fft.ifft(pre_bins, axis=1)
        if not noiseless:
            wk0 = w_rf[0] if per_bin_rf else w_rf
            gram = wk0.conj().T @ wk0
            assert np.allclose(gram, np.eye(gram.shape[0]), atol=1e-9), \
                "per-bin noise shortcut requires an orthonormal analog combiner"
            pre = pre + complex_gaussian(rng, pre.shape, noise_var)
    else:
        raise ValueError(f"unknown oracle method {method!r}")

    # converter works per RF chain on each block's time samples
    post = np.swapaxes(quantize(np.swapaxes(pre, 1, 2), bits), 1, 2)
    rf_bins = np.fft.fft(post, axis=1)
    y_bins = np.einsum("kij,nki->nkj", combiner.baseband.conj(), rf_bins)
    return OracleResult(data_bins=data_bins, pre_adc=pre, post_adc=post,
                        rf_bins=rf_bins, y_bins=y_bins)


def model_received_bins(channel: ChannelRealization, precoders, combiner,
                        qmodel, cfg: SystemConfig,
                        data_bins: np.ndarray) -> np.ndarray:
    """Noiseless linearized per-bin model xi W_bb^H W_rf^H H F b for the
    given transmitted bins (blocks, K, N_s)."""
    h_mu = channel.mu_freq
    out = np.empty_like(data_bins)
    for k in range(cfg.num_bins):
        f_k = block_diag(*[p.effective(k) for p in precoders])
        w_k = combiner.rf_at(k) @ combiner.baseband[k]
        g = qmodel.xi * w_k.conj().T @ (h_mu[k] @ f_k)
        out[:, k, :] = data_bins[:, k, :] @ g.T
    return out
