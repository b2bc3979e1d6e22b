"""Frequency-flat beamformer design.

Per-user transmit side: per-bin SVD precoders are phase-aligned, averaged
over bins and approximated by a few constant-modulus dictionary atoms via
simultaneous orthogonal matching pursuit.  Receive side: per-bin MMSE
combining targets are fitted by a greedy spatially sparse pass that picks
exactly one atom per subarray, keeping the analog combiner block-diagonal.
The steering angle selected for each RF chain / subarray is recorded for
the delay-element stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import array_response
from .config import SystemConfig
from .errors import GridTooSmall, ShapeMismatch
from .numerics import hermitian_solve, svd

logger = logging.getLogger(__name__)


# -- types -------------------------------------------------------------------

@dataclass
class Dictionary:
    """Steering-vector dictionary on a uniform sine-space grid at the
    carrier frequency."""
    atoms: np.ndarray        # (n_ant, grid) unit-norm columns
    grid_angles: np.ndarray  # (grid,) radians, strictly increasing

    @property
    def sines(self) -> np.ndarray:
        return np.sin(self.grid_angles)


@dataclass
class HybridPrecoder:
    """Per-user analog + digital transmit precoder.

    2-D arrays are frequency-flat; a leading bin axis makes them per-bin.
    """
    rf: np.ndarray        # (N_Tu, N_rf) or (K, N_Tu, N_rf), constant modulus
    baseband: np.ndarray  # (N_rf, N_su) or (K, N_rf, N_su)
    selected_angles: np.ndarray = field(default_factory=lambda: np.empty(0))
    fit_residual: float = 0.0

    def effective(self, k: int | None = None) -> np.ndarray:
        rf = self.rf if self.rf.ndim == 2 else self.rf[k]
        bb = self.baseband if self.baseband.ndim == 2 else self.baseband[k]
        return rf @ bb


@dataclass
class HybridCombiner:
    """Base-station analog + digital combiner with the per-bin MMSE target
    it was fitted to."""
    rf: np.ndarray        # (N_BS, N_rf) block-diagonal, or (K, N_BS, N_rf)
    baseband: np.ndarray  # (K, N_rf, N_s)
    selected_angles: np.ndarray
    w_opt: np.ndarray     # (K, N_BS, N_s) per-bin target

    def rf_at(self, k: int) -> np.ndarray:
        return self.rf if self.rf.ndim == 2 else self.rf[k]


# -- transmit side -----------------------------------------------------------

def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive
    (per-bin singular vectors carry arbitrary phases that would otherwise
    cancel under averaging)."""
    out = v.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        pivot = v[i, j]
        if np.abs(pivot) > 0:
            out[:, j] *= np.conj(pivot) / np.abs(pivot)
    return out


def per_bin_optimal_precoder(h_uk: np.ndarray, n_streams: int) -> np.ndarray:
    """Dominant right-singular vectors of one per-bin channel, phase
    canonicalized.  Rank deficiency pads with trailing singular vectors."""
    u, s, v = svd(h_uk)
    if n_streams > v.shape[1]:
        raise ShapeMismatch(f"cannot extract {n_streams} streams from "
                            f"{v.shape[1]} columns")
    if s[min(n_streams, len(s)) - 1] < 1e-12 * max(s[0], 1e-300):
        logger.warning("rank-deficient channel: padding precoder with "
                       "null-space directions")
    return _canonical_phase(v[:, :n_streams])


def average_precoder(per_bin: np.ndarray) -> np.ndarray:
    """Arithmetic mean over the bin axis of (K, m, n) per-bin precoders."""
    per_bin = np.asarray(per_bin)
    if per_bin.ndim != 3:
        raise ShapeMismatch("expected (K, m, n) stack")
    return per_bin.mean(axis=0)


def build_dictionary(n_ant: int, grid_size: int, f_c: float = 1.0) -> Dictionary:
    """Uniform sine-space grid covering [-1, 1] with both endpoints (single
    atom grids sit at broadside)."""
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    if grid_size == 1:
        sines = np.array([0.0])
    else:
        g = np.arange(grid_size)
        sines = 2.0 * g / (grid_size - 1) - 1.0
    angles = np.arcsin(sines)
    atoms = np.stack([array_response(n_ant, th, f_c, f_c) for th in angles],
                     axis=1)
    return Dictionary(atoms=atoms, grid_angles=angles)


def somp_precoder(f_opt: np.ndarray, dictionary: Dictionary,
                  n_rf: int, n_streams: int | None = None) -> HybridPrecoder:
    """Greedy sparse fit of the target precoder on the dictionary.

    Picks n_rf atoms by maximal residual correlation energy, solves the
    joint least squares for the baseband and renormalizes so the effective
    precoder carries n_streams of power.  Ties break toward the lowest
    grid index; the per-iteration residual is normalized, which leaves the
    selection invariant but keeps the recursion well-scaled.
    """
    atoms = dictionary.atoms
    if atoms.shape[1] < n_rf:
        raise GridTooSmall(f"grid of {atoms.shape[1]} atoms cannot supply "
                           f"{n_rf} RF chains")
    if atoms.shape[0] != f_opt.shape[0]:
        raise ShapeMismatch("dictionary atom length must match precoder rows")
    n_streams = f_opt.shape[1] if n_streams is None else n_streams

    residual = f_opt.copy()
    chosen: list[int] = []
    for _ in range(n_rf):
        corr = atoms.conj().T @ residual
        energies = np.sum(np.abs(corr) ** 2, axis=1)
        chosen.append(int(np.argmax(energies)))
        sel = atoms[:, chosen]
        bb, *_ = np.linalg.lstsq(sel, f_opt, rcond=None)
        residual = f_opt - sel @ bb
        norm = np.linalg.norm(residual)
        if norm > 0:
            residual = residual / norm
    sel = atoms[:, chosen]
    bb, *_ = np.linalg.lstsq(sel, f_opt, rcond=None)
    fit_residual = float(np.linalg.norm(f_opt - sel @ bb))
    scale = np.linalg.norm(sel @ bb)
    if scale > 0:
        bb = bb * (np.sqrt(n_streams) / scale)
    return HybridPrecoder(rf=sel, baseband=bb,
                          selected_angles=dictionary.grid_angles[chosen],
                          fit_residual=fit_residual)


# -- receive side ------------------------------------------------------------

def mmse_combiner_per_bin(h_eq_k: np.ndarray, noise_var: float,
                          n_streams: int) -> np.ndarray:
    """W = H (H^H H + s2 Ns I)^-1 for one equivalent per-bin channel."""
    gram = h_eq_k.conj().T @ h_eq_k
    reg = gram + noise_var * n_streams * np.eye(gram.shape[0])
    # reg is Hermitian PD, so W^H = reg^-1 H^H
    return hermitian_solve(reg, h_eq_k.conj().T).conj().T


def spatially_sparse_combiner(w_opt: np.ndarray, dictionary: Dictionary,
                              cfg: SystemConfig, xi: float = 1.0
                              ) -> HybridCombiner:
    """One-atom-per-subarray greedy fit of the concatenated per-bin MMSE
    targets.

    Iterates subarrays in order; each step correlates that subarray's
    dictionary block with the (normalized) residual, appends the winning
    block-diagonal column, re-solves the joint least squares and records
    the selected steering angle.  Unit-norm atoms on disjoint rows make the
    analog Gram exactly the identity, so the least squares collapses to
    W_rf^H applied to the target; the final per-bin baseband additionally
    undoes the ADC linear gain.
    """
    k_len, n_bs, n_s = w_opt.shape
    if n_bs != cfg.bs_antennas:
        raise ShapeMismatch("target rows must equal bs_antennas")
    n_sub = cfg.subarray_antennas
    n_chains = cfg.bs_rf_chains
    # columns of the concatenated target: [W[1] ... W[K]]
    target = np.moveaxis(w_opt, 0, 1).reshape(n_bs, k_len * n_s)

    w_rf = np.zeros((n_bs, n_chains), dtype=np.complex128)
    angles = np.zeros(n_chains)
    residual = target.copy()
    for s_l in range(n_chains):
        rows = slice(s_l * n_sub, (s_l + 1) * n_sub)
        corr = dictionary.atoms.conj().T @ residual[rows]
        energies = np.sum(np.abs(corr) ** 2, axis=1)
        pick = int(np.argmax(energies))
        w_rf[rows, s_l] = dictionary.atoms[:, pick]
        angles[s_l] = dictionary.grid_angles[pick]
        active = w_rf[:, :s_l + 1]
        # disjoint unit-norm blocks: active^H active == I
        bb = active.conj().T @ target
        residual = target - active @ bb
        nrm = np.linalg.norm(residual)
        if nrm > 0:
            residual = residual / nrm

    gram = w_rf.conj().T @ w_rf
    assert np.allclose(gram, np.eye(n_chains), atol=1e-12), \
        "block-diagonal combiner lost orthonormality"
    baseband = np.einsum("ij,kil->kjl", w_rf.conj(), w_opt) / xi
    return HybridCombiner(rf=w_rf, baseband=baseband, selected_angles=angles,
                          w_opt=w_opt)
