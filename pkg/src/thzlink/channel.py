"""Dual-wideband THz multi-user MIMO channel synthesis.

Each user-to-subarray link is a sum of one line-of-sight path and a few
reflected clusters.  Every path contributes an outer product of
frequency-dependent array responses (the per-antenna phase slope scales
with f_k/f_c, which is what makes wide arrays squint), weighted by a
free-space/absorption path amplitude and the DFT of the delayed pulse
shape.  Per-bin responses are the primary representation; the matching
time-domain taps are their exact inverse DFT, so block transmission through
the taps and per-bin multiplication agree to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .config import PULSE_RECT, PULSE_RRC, SystemConfig
from .errors import DelayOutOfRange
from .numerics import dft_sequence, idft_sequence

# Paths are drawn from this angular sector (radians).
ANGLE_SPREAD = np.pi / 3


def subcarrier_frequencies(cfg: SystemConfig) -> np.ndarray:
    """All K subcarrier frequencies, 1-based grid centered on the carrier."""
    k = np.arange(1, cfg.num_bins + 1)
    return cfg.carrier_freq_hz + (k - (cfg.num_bins + 1) / 2.0) * (
        cfg.bandwidth_hz / cfg.num_bins)


def subcarrier_frequency(k: int, cfg: SystemConfig) -> float:
    """Frequency of subcarrier k, k = 1..K."""
    if not 1 <= k <= cfg.num_bins:
        raise IndexError(f"subcarrier index {k} outside 1..{cfg.num_bins}")
    return float(cfg.carrier_freq_hz + (k - (cfg.num_bins + 1) / 2.0)
                 * (cfg.bandwidth_hz / cfg.num_bins))


def array_response(n_ant: int, theta: float, f_k: float, f_c: float) -> np.ndarray:
    """Unit-norm ULA response; the phase slope carries the f_k/f_c factor
    responsible for beam squint."""
    n = np.arange(n_ant)
    return np.exp(-1j * np.pi * n * (f_k / f_c) * np.sin(theta)) / np.sqrt(n_ant)


def array_response_multi(n_ant: int, theta: float, freqs: np.ndarray,
                         f_c: float) -> np.ndarray:
    """(len(freqs), n_ant) stack of array responses at one physical angle."""
    n = np.arange(n_ant)
    phase = np.multiply.outer(np.asarray(freqs) / f_c, n) * np.sin(theta)
    return np.exp(-1j * np.pi * phase) / np.sqrt(n_ant)


def normalized_array_gain(steer_vec: np.ndarray, theta: float, f_k: float,
                          f_c: float) -> float:
    """|a(theta, f_k)^H steer_vec| for a unit-norm steering vector."""
    a = array_response(len(steer_vec), theta, f_k, f_c)
    return float(np.abs(np.vdot(a, steer_vec)))


# -- pulse shaping -----------------------------------------------------------

def rrc_taps(t_norm: np.ndarray, rolloff: float) -> np.ndarray:
    """Root-raised-cosine samples at times t_norm (in symbol intervals)."""
    b = rolloff
    t = np.asarray(t_norm, dtype=float)
    out = np.empty_like(t)
    near_zero = np.abs(t) < 1e-10
    sing = np.abs(np.abs(4.0 * b * t) - 1.0) < 1e-10
    out[near_zero] = 1.0 + b * (4.0 / np.pi - 1.0)
    if np.any(sing):
        out[sing] = (b / np.sqrt(2.0)) * (
            (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * b))
            + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * b)))
    rest = ~(near_zero | sing)
    tr = t[rest]
    num = np.sin(np.pi * tr * (1.0 - b)) + 4.0 * b * tr * np.cos(np.pi * tr * (1.0 + b))
    den = np.pi * tr * (1.0 - (4.0 * b * tr) ** 2)
    out[rest] = num / den
    return out


def sampled_pulse(tau: float, cfg: SystemConfig) -> np.ndarray:
    """The delayed pulse sampled on the K-length block grid, p(z T_s - tau).

    Rect holds one sample: the delay rounds up to the next sample instant.
    RRC samples the closed form and is renormalized to unit energy within
    the window, so both shapes inject equal per-path energy.
    """
    ts = cfg.sample_interval
    max_tau = (cfg.channel_taps - 1) * ts
    if tau < -1e-12 * ts or tau > max_tau * (1 + 1e-12) + 1e-30:
        raise DelayOutOfRange(
            f"delay {tau} outside [0, {max_tau}] supported by "
            f"{cfg.channel_taps} taps")
    k_len = cfg.num_bins
    samples = np.zeros(k_len)
    if cfg.pulse_shape == PULSE_RECT:
        z = int(np.ceil(tau / ts - 1e-9))
        samples[z] = 1.0
        return samples
    z = np.arange(k_len)
    samples = rrc_taps(z - tau / ts, cfg.rrc_rolloff)
    return samples / np.linalg.norm(samples)


def pulse_coefficients(tau: float, cfg: SystemConfig) -> np.ndarray:
    """K-point DFT of the sampled, delayed pulse (all bins at once)."""
    return np.fft.fft(sampled_pulse(tau, cfg))


def pulse_coefficient(k: int, tau: float, cfg: SystemConfig) -> complex:
    """Single DFT bin k (0-based) of the sampled, delayed pulse."""
    return complex(pulse_coefficients(tau, cfg)[k])


# -- path amplitude ----------------------------------------------------------

def path_gain_amplitude(f_k: float, d_path: float, is_los: bool,
                        cfg: SystemConfig) -> float:
    """Free-space spreading times molecular absorption, plus one reflection
    loss for bounced paths.  Antenna gains are applied separately as
    channel prefactors."""
    if d_path <= 0:
        raise ValueError("path length must be positive")
    amp = (SPEED_OF_LIGHT / (4.0 * np.pi * f_k * d_path)
           * np.exp(-cfg.absorption_coeff * d_path / 2.0))
    if not is_los:
        amp *= cfg.reflection_amp
    return float(amp)


# -- realization -------------------------------------------------------------

@dataclass
class PathParams:
    """Geometry and gain of one propagation path (angles in radians)."""
    aoa: float
    aod: float
    delay: float
    d_path: float
    is_los: bool
    phase: float = 0.0
    cluster: int = 0
    ray: int = 0
    gain_fc: complex = 0j  # amplitude at the carrier, incl. phase


@dataclass
class ChannelRealization:
    """Per-user frequency responses, their exact inverse-DFT taps and the
    path parameters they were built from."""
    cfg: SystemConfig
    freq: np.ndarray            # (U, K, N_BS, N_Tu)
    taps: np.ndarray            # (U, K, N_BS, N_Tu), inverse DFT over bins
    paths: list[list[PathParams]] = field(default_factory=list)

    @property
    def mu_freq(self) -> np.ndarray:
        """(K, N_BS, N_T) user-concatenated per-bin channel."""
        u, k, n_bs, n_tu = self.freq.shape
        return np.concatenate([self.freq[i] for i in range(u)], axis=2)

    @property
    def mu_taps(self) -> np.ndarray:
        u, k, n_bs, n_tu = self.taps.shape
        return np.concatenate([self.taps[i] for i in range(u)], axis=2)


def _draw_paths(cfg: SystemConfig, rng: np.random.Generator) -> list[PathParams]:
    """One user's LoS path plus NLoS clusters (delays are excess delays;
    bounced path lengths grow by the excess propagation distance)."""
    ts = cfg.sample_interval
    paths = [PathParams(
        aoa=rng.uniform(-ANGLE_SPREAD, ANGLE_SPREAD),
        aod=rng.uniform(-ANGLE_SPREAD, ANGLE_SPREAD),
        delay=0.0, d_path=cfg.distance_m, is_los=True)]
    for q in range(cfg.num_nlos_clusters):
        for j in range(cfg.rays_per_cluster):
            tau = rng.uniform(0.0, (cfg.channel_taps - 1) * ts)
            paths.append(PathParams(
                aoa=rng.uniform(-ANGLE_SPREAD, ANGLE_SPREAD),
                aod=rng.uniform(-ANGLE_SPREAD, ANGLE_SPREAD),
                delay=tau,
                d_path=cfg.distance_m + SPEED_OF_LIGHT * tau,
                is_los=False,
                phase=rng.uniform(0.0, 2.0 * np.pi),
                cluster=q + 1, ray=j + 1))
    return paths


def generate_channel(cfg: SystemConfig, rng: np.random.Generator | None = None,
                     paths: list[list[PathParams]] | None = None
                     ) -> ChannelRealization:
    """Draw path geometry (or take it as given) and synthesize per-bin
    responses for every user.

    Per path and bin the subarray block is
    sqrt(N_Tu N_sub) * alpha(f_k) * beta_tau[k] * G_T G_R * a_bs a_tx^H,
    with the usual 1/sqrt(N_cl N_ray) normalization for bounced clusters.
    All subarrays observe the same physical angle through their slice of
    the one base-station aperture, so subarray s_l sees the common
    6-element response times its geometric phase offset
    exp(-j pi s_l N_sub (f_k/f_c) sin(aoa)).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    freqs = subcarrier_frequencies(cfg)
    n_sub = cfg.subarray_antennas
    n_tx = cfg.tx_antennas_per_user
    k_len = cfg.num_bins
    gain_pref = cfg.tx_gain_amp * cfg.rx_gain_amp
    n_cl = cfg.num_nlos_clusters * cfg.rays_per_cluster

    all_freq = np.zeros((cfg.num_users, k_len, cfg.bs_antennas, n_tx),
                        dtype=np.complex128)
    all_paths = []
    for u in range(cfg.num_users):
        user_paths = paths[u] if paths is not None else _draw_paths(cfg, rng)
        n_cl_u = (sum(not p.is_los for p in user_paths) if paths is not None
                  else n_cl)
        block = np.zeros((k_len, cfg.bs_antennas, n_tx), dtype=np.complex128)
        for p in user_paths:
            if p.is_los:
                scale = np.sqrt(n_tx * n_sub)
            else:
                scale = np.sqrt(n_tx * n_sub / n_cl_u)
            amp = np.array([path_gain_amplitude(f, p.d_path, p.is_los, cfg)
                            for f in freqs])
            beta = pulse_coefficients(p.delay, cfg)
            coef = scale * gain_pref * amp * beta * np.exp(1j * p.phase)
            p.gain_fc = complex(
                scale * gain_pref * np.exp(1j * p.phase)
                * path_gain_amplitude(cfg.carrier_freq_hz, p.d_path, p.is_los, cfg))
            # full-aperture phasing, normalized per subarray slice
            a_bs = array_response_multi(cfg.bs_antennas, p.aoa, freqs,
                                        cfg.carrier_freq_hz)
            a_bs = a_bs * np.sqrt(cfg.bs_antennas / n_sub)
            a_tx = array_response_multi(n_tx, p.aod, freqs, cfg.carrier_freq_hz)
            block += np.einsum("k,ki,kj->kij", coef, a_bs, a_tx.conj())
        if cfg.normalize_channel:
            # unit total direct-path power across users: per-user direct
            # path carries Frobenius power 1/U
            los_frob = (np.sqrt(n_tx * cfg.bs_antennas * cfg.num_users)
                        * gain_pref
                        * path_gain_amplitude(cfg.carrier_freq_hz,
                                              cfg.distance_m, True, cfg))
            block = block / los_frob
        all_freq[u] = block
        all_paths.append(user_paths)

    all_taps = np.empty_like(all_freq)
    for u in range(cfg.num_users):
        all_taps[u] = idft_sequence(all_freq[u], k_len)
    return ChannelRealization(cfg=cfg, freq=all_freq, taps=all_taps,
                              paths=all_paths)


def verify_tap_consistency(real: ChannelRealization) -> float:
    """Max relative error between the stored per-bin responses and the DFT
    of the stored taps (should be at roundoff level by construction)."""
    err = 0.0
    for u in range(real.freq.shape[0]):
        back = dft_sequence(real.taps[u], real.cfg.num_bins)
        num = np.linalg.norm(back - real.freq[u])
        den = np.linalg.norm(real.freq[u])
        err = max(err, num / den)
    return err
