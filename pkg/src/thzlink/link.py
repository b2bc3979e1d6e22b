"""End-to-end transceiver design for one channel realization: stage-1
frequency-flat beamformers, their delay-compensated per-bin versions, and
the matching ADC model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, subcarrier_frequencies
from .config import IDEAL, SystemConfig
from .metrics import stacked_precoders, sum_spectral_efficiency
from .quantization import (QuantizationModel, build_quantization_model,
                           bussgang_gain)
from .stage1 import (HybridCombiner, HybridPrecoder, average_precoder,
                     build_dictionary, per_bin_optimal_precoder,
                     somp_precoder, spatially_sparse_combiner)
from .stage2 import ttd_combiner_per_bin, ttd_precoder_per_bin

SCHEME_TTD = "proposed-ttd"
SCHEME_STAGE1 = "stage1-only"
SCHEME_DIGITAL = "digital-ideal"
SCHEMES = (SCHEME_TTD, SCHEME_STAGE1, SCHEME_DIGITAL)


@dataclass
class LinkDesign:
    """Both hybrid schemes sharing one stage-1 pass."""
    precoders: list[HybridPrecoder]
    combiner: HybridCombiner
    precoders_ttd: list[HybridPrecoder]
    combiner_ttd: HybridCombiner
    noise_var: float
    xi: float


def design_precoders(channel: ChannelRealization, cfg: SystemConfig
                     ) -> list[HybridPrecoder]:
    """Stage-1 transmit side for every user."""
    tx_dict = build_dictionary(cfg.tx_antennas_per_user, cfg.tx_grid_size,
                               cfg.carrier_freq_hz)
    out = []
    for u in range(cfg.num_users):
        per_bin = np.stack([
            per_bin_optimal_precoder(channel.freq[u, k], cfg.streams_per_user)
            for k in range(cfg.num_bins)])
        f_avg = average_precoder(per_bin)
        out.append(somp_precoder(f_avg, tx_dict, cfg.tx_rf_chains_per_user,
                                 cfg.streams_per_user))
    return out


def mmse_targets(channel: ChannelRealization, precoders, cfg: SystemConfig,
                 noise_var: float) -> np.ndarray:
    """(K, N_BS, N_s) per-bin MMSE combining targets for the precoded
    multi-user channel."""
    h_mu = channel.mu_freq
    n_s = cfg.total_streams
    h_eq = np.matmul(h_mu, stacked_precoders(precoders, cfg.num_bins))
    gram = np.matmul(h_eq.conj().swapaxes(1, 2), h_eq)
    reg = gram + noise_var * n_s * np.eye(n_s)
    # W^H = reg^-1 H^H, batched over bins
    return np.linalg.solve(reg, h_eq.conj().swapaxes(1, 2)).conj().swapaxes(1, 2)


def design_link(channel: ChannelRealization, cfg: SystemConfig,
                noise_var: float | None = None) -> LinkDesign:
    """Run both stages and return the flat and per-bin transceivers."""
    noise_var = cfg.noise_variance if noise_var is None else noise_var
    xi = bussgang_gain(cfg.adc_bits)
    freqs = subcarrier_frequencies(cfg)

    precoders = design_precoders(channel, cfg)
    w_opt = mmse_targets(channel, precoders, cfg, noise_var)
    rx_dict = build_dictionary(cfg.subarray_antennas, cfg.rx_grid_size,
                               cfg.carrier_freq_hz)
    combiner = spatially_sparse_combiner(w_opt, rx_dict, cfg, xi)

    precoders_ttd = [
        ttd_precoder_per_bin(channel.freq[u], precoders[u], freqs, cfg)
        for u in range(cfg.num_users)]
    combiner_ttd = ttd_combiner_per_bin(combiner, freqs, cfg, xi)
    return LinkDesign(precoders=precoders, combiner=combiner,
                      precoders_ttd=precoders_ttd, combiner_ttd=combiner_ttd,
                      noise_var=noise_var, xi=xi)


def design_digital(channel: ChannelRealization, cfg: SystemConfig,
                   noise_var: float) -> tuple[list[HybridPrecoder], HybridCombiner]:
    """Unconstrained per-bin SVD precoding with per-bin MMSE combining and
    no converter loss; the explicit reference the hybrid schemes are
    compared against."""
    precoders = []
    for u in range(cfg.num_users):
        bb = np.stack([
            per_bin_optimal_precoder(channel.freq[u, k], cfg.streams_per_user)
            for k in range(cfg.num_bins)])
        precoders.append(HybridPrecoder(
            rf=np.eye(cfg.tx_antennas_per_user, dtype=np.complex128),
            baseband=bb))
    w_opt = mmse_targets(channel, precoders, cfg, noise_var)
    combiner = HybridCombiner(
        rf=np.eye(cfg.bs_antennas, dtype=np.complex128),
        baseband=w_opt, selected_angles=np.empty(0), w_opt=w_opt)
    return precoders, combiner


def digital_noise_model(cfg: SystemConfig, noise_var: float) -> QuantizationModel:
    n = cfg.bs_antennas
    return QuantizationModel(bits=IDEAL, rho=0.0, xi=1.0,
                             qtilde=np.zeros((n, n)), r=np.zeros((n, n)),
                             c=noise_var * np.eye(n))


def evaluate_scheme(channel: ChannelRealization, design: LinkDesign | None,
                    scheme: str, cfg: SystemConfig,
                    bits=None, noise_var: float | None = None) -> float:
    """Spectral efficiency of one scheme on one realization.

    The flat/per-bin transceivers in `design` do not depend on the bit
    depth (baseband rescaling by the linear gain leaves the log-det
    unchanged), so one design evaluates every resolution.
    """
    noise_var = cfg.noise_variance if noise_var is None else noise_var
    if scheme == SCHEME_DIGITAL:
        precoders, combiner = design_digital(channel, cfg, noise_var)
        qmodel = digital_noise_model(cfg, noise_var)
        return sum_spectral_efficiency(channel, precoders, combiner, qmodel, cfg)
    if design is None:
        raise ValueError("hybrid schemes need a LinkDesign")
    if scheme == SCHEME_TTD:
        precoders, combiner = design.precoders_ttd, design.combiner_ttd
    elif scheme == SCHEME_STAGE1:
        precoders, combiner = design.precoders, design.combiner
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    qmodel = build_quantization_model(channel, precoders, combiner.rf, cfg,
                                      bits=bits, noise_var=noise_var)
    return sum_spectral_efficiency(channel, precoders, combiner, qmodel, cfg)
