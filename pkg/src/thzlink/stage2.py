"""True-time-delay compensation.

A frequency-flat steering column is split into M equal sub-vectors, each
fed through one delay line.  The delay ladder grows linearly with the
sub-vector index at (P theta / 2) carrier periods per step (offset so all
delays stay nonnegative for negative directions), and a fixed per
sub-vector phase absorbs the frequency-independent part.  At the carrier
the two factors cancel and the stage-1 beam is recovered; away from it the
net phase walks the beam back onto the physical direction, undoing squint.
Per-bin basebands are then re-derived behind the delayed analog front end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import DivisibilityError
from .stage1 import HybridCombiner, HybridPrecoder, _canonical_phase


def rotation_factor(f_k: float, f_c: float, ps_per_ttd: int,
                    theta_sine: float) -> float:
    """Per-bin beam-steering correction (f_k/f_c - 1) P theta."""
    return (f_k / f_c - 1.0) * ps_per_ttd * theta_sine


def ttd_delays(theta_sine: float, ps_per_ttd: int, num_ttd: int,
               carrier_period: float) -> np.ndarray:
    """Nonnegative delay ladder for one RF chain.

    theta >= 0: t_m = (m-1) (P theta / 2) T_c; negative directions add the
    constant (M-1) |P theta / 2| T_c offset so the ladder stays physical.
    """
    m = np.arange(num_ttd)
    step = ps_per_ttd * theta_sine / 2.0 * carrier_period
    delays = m * step
    if theta_sine < 0:
        delays = delays + (num_ttd - 1) * abs(step)
    return delays


def apply_ttd(column: np.ndarray, theta_sine: float, f_k: float,
              f_c: float, num_ttd: int) -> np.ndarray:
    """Push one constant-modulus column through the delay network at one
    frequency: sub-vector m picks up exp(j pi (m-1) P theta) times the
    delay phase exp(-2j pi f_k t_m).  Moduli are untouched."""
    n = len(column)
    if n % num_ttd != 0:
        raise DivisibilityError(
            f"column of {n} elements cannot split into {num_ttd} delay groups")
    p = n // num_ttd
    delays = ttd_delays(theta_sine, p, num_ttd, 1.0 / f_c)
    m = np.arange(num_ttd)
    factors = np.exp(1j * np.pi * m * p * theta_sine) * np.exp(-2j * np.pi * f_k * delays)
    return (column.reshape(num_ttd, p) * factors[:, None]).reshape(n)


@dataclass
class TTDNetwork:
    """Delay table of one RF chain, for inspection dumps."""
    chain: int
    theta_sine: float
    delays: np.ndarray


def ttd_networks(angles: np.ndarray, ps_per_ttd: int, num_ttd: int,
                 carrier_period: float) -> list[TTDNetwork]:
    return [TTDNetwork(chain=i, theta_sine=float(np.sin(a)),
                       delays=ttd_delays(np.sin(a), ps_per_ttd, num_ttd,
                                         carrier_period))
            for i, a in enumerate(angles)]


def ttd_precoder_per_bin(channel_u_freq: np.ndarray, precoder: HybridPrecoder,
                         freqs: np.ndarray, cfg: SystemConfig) -> HybridPrecoder:
    """Frequency-dependent version of one user's stage-1 precoder.

    Each RF column is steered per bin toward its recorded angle through the
    delay network; the per-bin baseband is the dominant right-singular
    block of the effective channel behind the delayed front end, rescaled
    to the transmit power budget.
    """
    k_len = len(freqs)
    n_tx, n_rf = precoder.rf.shape
    n_su = precoder.baseband.shape[1]
    sines = np.sin(precoder.selected_angles)
    rf_k = np.empty((k_len, n_tx, n_rf), dtype=np.complex128)
    for k in range(k_len):
        for l in range(n_rf):
            rf_k[k, :, l] = apply_ttd(precoder.rf[:, l], sines[l], freqs[k],
                                      cfg.carrier_freq_hz, cfg.ttd_per_chain)
    h_eq = np.matmul(channel_u_freq, rf_k)
    _, _, vh = np.linalg.svd(h_eq, full_matrices=False)
    bb_k = np.empty((k_len, n_rf, n_su), dtype=np.complex128)
    for k in range(k_len):
        bb = _canonical_phase(vh[k].conj().T[:, :n_su])
        scale = np.linalg.norm(rf_k[k] @ bb)
        if scale > 0:
            bb = bb * (np.sqrt(n_su) / scale)
        bb_k[k] = bb
    return HybridPrecoder(rf=rf_k, baseband=bb_k,
                          selected_angles=precoder.selected_angles,
                          fit_residual=precoder.fit_residual)


def ttd_combiner_per_bin(combiner: HybridCombiner, freqs: np.ndarray,
                         cfg: SystemConfig, xi: float = 1.0) -> HybridCombiner:
    """Frequency-dependent version of the stage-1 combiner.

    Applies the delay network per subarray block (the block-diagonal
    structure is preserved exactly) and refits the per-bin baseband against
    the stored MMSE targets, undoing the ADC linear gain."""
    k_len = len(freqs)
    n_bs, n_chains = combiner.rf.shape
    n_sub = cfg.subarray_antennas
    sines = np.sin(combiner.selected_angles)
    rf_k = np.zeros((k_len, n_bs, n_chains), dtype=np.complex128)
    for k in range(k_len):
        for s_l in range(n_chains):
            rows = slice(s_l * n_sub, (s_l + 1) * n_sub)
            rf_k[k, rows, s_l] = apply_ttd(
                combiner.rf[rows, s_l], sines[s_l], freqs[k],
                cfg.carrier_freq_hz, cfg.ttd_per_chain)
    # phase-only update keeps blocks unit-norm and disjoint, so the joint
    # least squares is still just the adjoint applied to the target
    baseband = np.einsum("kij,kil->kjl", rf_k.conj(), combiner.w_opt) / xi
    return HybridCombiner(rf=rf_k, baseband=baseband,
                          selected_angles=combiner.selected_angles,
                          w_opt=combiner.w_opt)
