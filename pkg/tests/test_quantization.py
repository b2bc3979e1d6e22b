import numpy as np
import pytest

from thzlink.channel import generate_channel
from thzlink.config import IDEAL
from thzlink.errors import UnsupportedResolution
from thzlink.link import design_link
from thzlink.numerics import complex_gaussian, trial_rng
from thzlink.oracle import time_domain_oracle
from thzlink.quantization import (build_quantization_model, bussgang_gain,
                                  distortion_factor, lloyd_max_codebook,
                                  noise_covariances, quantize,
                                  signal_covariance,
                                  signal_covariance_per_bin)
from thzlink.stage1 import HybridPrecoder

from conftest import small_config


# -- codebook / distortion ------------------------------------------------------

def test_one_bit_distortion_analytic():
    assert abs(distortion_factor(1) - (1 - 2 / np.pi)) < 1e-6


def test_one_bit_levels():
    levels, bounds = lloyd_max_codebook(1)
    assert np.allclose(levels, [-np.sqrt(2 / np.pi), np.sqrt(2 / np.pi)])
    assert np.allclose(bounds, [0.0])


def test_three_bit_distortion_value():
    # Lloyd-Max fixed point for the 8-level Gaussian quantizer
    assert np.isclose(distortion_factor(3), 0.0345477, atol=2e-6)


def test_distortion_strictly_decreasing():
    values = [distortion_factor(b) for b in range(1, 13)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert distortion_factor(IDEAL) == 0.0


def test_unsupported_resolutions():
    with pytest.raises(UnsupportedResolution):
        distortion_factor(13)
    with pytest.raises(UnsupportedResolution):
        lloyd_max_codebook(0)


def test_codebook_centroid_fixed_point():
    levels, bounds = lloyd_max_codebook(4)
    assert np.all(np.diff(levels) > 0)
    assert np.allclose(bounds, (levels[:-1] + levels[1:]) / 2)
    # symmetric for a symmetric density
    assert np.allclose(levels, -levels[::-1], atol=1e-9)


# -- quantize -------------------------------------------------------------------

def test_ideal_mode_identity():
    rng = np.random.default_rng(0)
    x = complex_gaussian(rng, 64)
    assert np.array_equal(quantize(x, IDEAL), x)


def test_one_bit_fixture_value():
    # vector constructed so the sample per-component variance is exactly 0.5
    x = np.array([0.3 + 0.9j, np.sqrt(1.1) + 0j])
    assert np.isclose(np.mean(np.abs(x) ** 2) / 2, 0.5)
    out = quantize(x, 1)
    level = np.sqrt(1 / np.pi)
    assert np.allclose(out[0], level * (1 + 1j), atol=1e-12)
    assert np.isclose(out[1].real, level, atol=1e-12)


def test_zero_vector_passthrough():
    out = quantize(np.zeros(8, dtype=complex), 3)
    assert np.array_equal(out, np.zeros(8))


def test_empirical_distortion_matches_factor():
    rng = np.random.default_rng(1)
    x = complex_gaussian(rng, 1_000_000)
    q = quantize(x, 3)
    emp = np.mean(np.abs(x - q) ** 2) / np.mean(np.abs(x) ** 2)
    assert abs(emp / distortion_factor(3) - 1) < 0.02


@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_bussgang_orthogonality(bits):
    rng = np.random.default_rng(100 + bits)
    x = complex_gaussian(rng, 1_000_000)
    q = quantize(x, bits)
    xi = bussgang_gain(bits)
    resid = q - xi * x
    corr = np.vdot(x, resid) / np.sqrt(np.vdot(x, x).real * np.vdot(resid, resid).real)
    assert abs(corr) < 0.01


def test_quantize_rowwise_scaling():
    rng = np.random.default_rng(2)
    rows = np.stack([complex_gaussian(rng, 4096),
                     10.0 * complex_gaussian(rng, 4096)])
    out = quantize(rows, 2)
    # per-row scaling keeps relative distortion comparable across rows
    d0 = np.mean(np.abs(rows[0] - out[0]) ** 2) / np.mean(np.abs(rows[0]) ** 2)
    d1 = np.mean(np.abs(rows[1] - out[1]) ** 2) / np.mean(np.abs(rows[1]) ** 2)
    assert abs(d0 / d1 - 1) < 0.2


# -- covariance algebra -----------------------------------------------------------

def _flat_precoder(rf, bb):
    return HybridPrecoder(rf=np.asarray(rf, dtype=complex),
                          baseband=np.asarray(bb, dtype=complex))


class _StubChannel:
    def __init__(self, taps, freq):
        self.taps = taps
        self.freq = freq


def test_signal_covariance_projector_case():
    cfg = small_config(num_users=1, tx_antennas_per_user=2,
                       tx_rf_chains_per_user=2, streams_per_user=1,
                       bs_antennas=2, bs_rf_chains=1, ttd_per_chain=1,
                       num_bins=4, channel_taps=1, symbol_variance=2.0)
    k_len = cfg.num_bins
    taps = np.zeros((1, k_len, 2, 2), dtype=complex)
    taps[0, 0] = np.eye(2)
    freq = np.tile(np.eye(2), (1, k_len, 1, 1)).astype(complex)
    ch = _StubChannel(taps, freq)
    f = np.array([[1.0], [0.0]])
    prec = _flat_precoder(np.eye(2), f)
    q = signal_covariance(ch, [prec], cfg)
    assert np.allclose(q, 2.0 * (f @ f.conj().T))


def test_signal_covariance_zero_precoder():
    cfg = small_config()
    ch = generate_channel(cfg, np.random.default_rng(0))
    prec = _flat_precoder(np.zeros((2, 1)), np.zeros((1, 1)))
    q = signal_covariance(ch, [prec, prec], cfg)
    assert np.allclose(q, 0)


def test_signal_covariance_matches_brute_sum():
    cfg = small_config(bs_antennas=4, bs_rf_chains=2, ttd_per_chain=1,
                       num_bins=6, channel_taps=2, num_nlos_clusters=1)
    ch = generate_channel(cfg, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    precs = []
    for u in range(cfg.num_users):
        rf = np.exp(2j * np.pi * rng.random((2, 1))) / np.sqrt(2)
        bb = rng.standard_normal((1, 1)) + 1j * rng.standard_normal((1, 1))
        precs.append(_flat_precoder(rf, bb))
    q = signal_covariance(ch, precs, cfg)
    ref = np.zeros((4, 4), dtype=complex)
    for u, p in enumerate(precs):
        f = p.rf @ p.baseband
        r_uu = cfg.symbol_variance * f @ f.conj().T
        for n in range(cfg.num_bins):
            ref += ch.taps[u][n] @ r_uu @ ch.taps[u][n].conj().T
    assert np.linalg.norm(q - ref) < 1e-12 * max(np.linalg.norm(ref), 1)


def test_signal_covariance_tap_and_bin_domains_agree():
    cfg = small_config()
    ch = generate_channel(cfg, np.random.default_rng(5))
    design = design_link(ch, cfg)
    q_taps = signal_covariance(ch, design.precoders, cfg)
    q_bins = signal_covariance_per_bin(ch, design.precoders, cfg).mean(axis=0)
    assert np.linalg.norm(q_taps - q_bins) < 1e-9 * np.linalg.norm(q_taps)


def test_noise_covariances_ideal_gain():
    rng = np.random.default_rng(6)
    w = np.linalg.qr(rng.standard_normal((6, 3)))[0]
    qt = rng.standard_normal((6, 6))
    qt = qt @ qt.T
    r, c = noise_covariances(w, qt, 1.0, 0.3)
    assert np.allclose(r, 0)
    assert np.allclose(c, 0.3 * w.conj().T @ w)


def test_noise_covariances_orthonormal_collapse():
    rng = np.random.default_rng(7)
    w = np.linalg.qr(rng.standard_normal((8, 4)))[0]
    xi = 0.9
    r, c = noise_covariances(w, np.zeros((8, 8)), xi, 0.2)
    assert np.allclose(r, xi * (1 - xi) * 0.2 * np.eye(4))
    assert np.allclose(c, xi * 0.2 * np.eye(4))


def test_covariance_structure_properties():
    cfg = small_config(adc_bits=3)
    ch = generate_channel(cfg, np.random.default_rng(8))
    design = design_link(ch, cfg)
    qm = build_quantization_model(ch, design.precoders, design.combiner.rf, cfg)
    # distortion covariance exactly diagonal, nonnegative
    assert np.allclose(qm.r, np.diag(np.diag(qm.r)))
    assert np.all(np.real(np.diag(qm.r)) >= 0)
    # effective noise splits into the scaled analog Gram plus the diagonal
    gram = design.combiner.rf.conj().T @ design.combiner.rf
    extra = qm.c - qm.xi ** 2 * cfg.noise_variance * gram
    assert np.allclose(extra, np.diag(np.diag(extra)))
    assert np.all(np.real(np.diag(extra)) >= -1e-15)
    # positive definite for positive noise power
    np.linalg.cholesky(qm.c)


def test_quantizer_error_variance_matches_model():
    """Converter residual variance per RF chain tracks the distortion
    covariance on the actual pre-ADC block signal (Monte Carlo)."""
    cfg = small_config(adc_bits=3, noise_variance=0.05, pulse_shape="rect",
                       num_bins=64, channel_taps=4)
    ch = generate_channel(cfg, trial_rng(11, 0))
    design = design_link(ch, cfg)
    qm = build_quantization_model(ch, design.precoders, design.combiner.rf, cfg)
    # 10^4 time samples through the chain
    blocks = 10_000 // cfg.num_bins + 1
    res = time_domain_oracle(ch, design.precoders, design.combiner, cfg,
                             trial_rng(11, 1), num_blocks=blocks,
                             method="per-bin")
    resid = res.post_adc - qm.xi * res.pre_adc
    emp = np.mean(np.abs(resid) ** 2, axis=(0, 1))
    # zero padding idles the signal (not the noise) on a slice of each block
    duty = cfg.data_block_len / cfg.num_bins
    w = design.combiner.rf
    sig = np.real(np.diag(w.conj().T @ qm.qtilde @ w))
    model = qm.xi * (1 - qm.xi) * (duty * sig + cfg.noise_variance)
    assert np.all(np.abs(emp / model - 1) < 0.05)
