import numpy as np
import pytest

from thzlink.channel import (ANGLE_SPREAD, PathParams, array_response,
                             generate_channel, normalized_array_gain,
                             path_gain_amplitude, pulse_coefficient,
                             pulse_coefficients, sampled_pulse,
                             subcarrier_frequencies, subcarrier_frequency,
                             verify_tap_consistency)
from thzlink.config import SystemConfig, validate
from thzlink.errors import DelayOutOfRange
from thzlink.numerics import circular_convolve, dft_sequence

from conftest import small_config


# -- subcarrier grid ----------------------------------------------------------

def test_center_bin_is_carrier_for_odd_k():
    cfg = small_config(num_bins=9, channel_taps=2)
    assert subcarrier_frequency(5, cfg) == cfg.carrier_freq_hz


def test_band_edges_default_grid():
    cfg = validate(SystemConfig())
    assert np.isclose(subcarrier_frequency(1, cfg), 1e12 - 4.9609375e9)
    assert np.isclose(subcarrier_frequency(128, cfg), 1e12 + 4.9609375e9)
    freqs = subcarrier_frequencies(cfg)
    assert freqs.shape == (128,)
    assert np.isclose(freqs[0], 1e12 - 4.9609375e9)


def test_subcarrier_index_bounds():
    cfg = small_config()
    with pytest.raises(IndexError):
        subcarrier_frequency(0, cfg)
    with pytest.raises(IndexError):
        subcarrier_frequency(cfg.num_bins + 1, cfg)


# -- array responses ----------------------------------------------------------

def test_broadside_response_uniform():
    a = array_response(5, 0.0, 1.1e12, 1e12)
    assert np.allclose(a, 1 / np.sqrt(5))


def test_quarter_wave_response():
    a = array_response(4, np.pi / 6, 1e12, 1e12)
    assert np.allclose(a, 0.5 * np.array([1, -1j, -1, 1j]))


def test_single_antenna_response():
    assert np.allclose(array_response(1, 0.7, 2e12, 1e12), [1.0])


def test_response_unit_norm_random():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(1, 32))
        a = array_response(n, rng.uniform(-1.5, 1.5), rng.uniform(0.9e12, 1.1e12), 1e12)
        assert np.isclose(np.linalg.norm(a), 1.0)


def test_nag_matched_and_orthogonal():
    steer = array_response(6, 0.4, 1e12, 1e12)
    assert np.isclose(normalized_array_gain(steer, 0.4, 1e12, 1e12), 1.0)
    # orthogonal direction: DFT-grid spacing gives exact nulls
    theta2 = np.arcsin(np.sin(0.4) + 2.0 / 6)
    assert normalized_array_gain(steer, theta2, 1e12, 1e12) < 1e-12


def test_nag_fixture_six_antennas():
    steer = array_response(6, np.pi / 6, 1e12, 1e12)
    val = normalized_array_gain(steer, np.pi / 6, 1.005e12, 1e12)
    # brute-force dot product oracle, frozen
    ref = abs(np.vdot(array_response(6, np.pi / 6, 1.005e12, 1e12), steer))
    assert np.isclose(val, ref, atol=1e-15)
    assert np.isclose(val, 0.9999100450034045, atol=1e-12)


def test_beam_split_monotone_within_main_lobe():
    cfg = validate(SystemConfig())
    steer = array_response(6, 0.5, cfg.carrier_freq_hz, cfg.carrier_freq_hz)
    freqs = subcarrier_frequencies(cfg)
    gains = np.array([normalized_array_gain(steer, 0.5, f, cfg.carrier_freq_hz)
                      for f in freqs])
    low = gains[:63]     # |f_k - f_c| decreasing
    high = gains[64:]    # |f_k - f_c| increasing
    assert np.all(np.diff(low) >= -1e-12)
    assert np.all(np.diff(high) <= 1e-12)


# -- pulse shaping ------------------------------------------------------------

def test_rect_zero_delay_all_ones():
    cfg = small_config(pulse_shape="rect")
    assert np.allclose(pulse_coefficients(0.0, cfg), 1.0)


def test_rect_one_sample_delay():
    cfg = small_config(pulse_shape="rect")
    ts = cfg.sample_interval
    k = np.arange(cfg.num_bins)
    expected = np.exp(-2j * np.pi * k / cfg.num_bins)
    assert np.allclose(pulse_coefficients(ts, cfg), expected)
    assert np.isclose(pulse_coefficient(3, ts, cfg), np.exp(-2j * np.pi * 3 / 8))


def test_rrc_matches_direct_summation():
    cfg = validate(SystemConfig(pulse_shape="rrc", rrc_rolloff=0.3))
    tau = 1.5 * cfg.sample_interval
    beta = pulse_coefficients(tau, cfg)
    samples = sampled_pulse(tau, cfg)
    k_len = cfg.num_bins
    ref = np.array([sum(samples[z] * np.exp(-2j * np.pi * k * z / k_len)
                        for z in range(k_len)) for k in range(k_len)])
    assert np.linalg.norm(beta - ref) / np.linalg.norm(ref) < 1e-12


def test_rrc_unit_energy():
    cfg = validate(SystemConfig(pulse_shape="rrc"))
    s = sampled_pulse(0.7 * cfg.sample_interval, cfg)
    assert np.isclose(np.linalg.norm(s), 1.0)


def test_delay_out_of_range():
    cfg = small_config()
    with pytest.raises(DelayOutOfRange):
        pulse_coefficients(cfg.sample_interval * cfg.channel_taps, cfg)
    with pytest.raises(DelayOutOfRange):
        pulse_coefficients(-cfg.sample_interval, cfg)


# -- path gain ----------------------------------------------------------------

def test_path_gain_spreading_laws():
    cfg = small_config(absorption_coeff=0.0)
    a1 = path_gain_amplitude(1e12, 10.0, True, cfg)
    assert np.isclose(path_gain_amplitude(1e12, 20.0, True, cfg), a1 / 2)
    assert np.isclose(path_gain_amplitude(2e12, 10.0, True, cfg), a1 / 2)


def test_path_gain_fixture():
    cfg = validate(SystemConfig(absorption_coeff=0.0033))
    amp = path_gain_amplitude(1e12, 15.0, True, cfg)
    assert np.isclose(amp, 1.5515679193347742e-06, rtol=1e-12)


def test_path_gain_reflection_loss():
    cfg = small_config(reflection_loss_db=-10.0)
    los = path_gain_amplitude(1e12, 10.0, True, cfg)
    nlos = path_gain_amplitude(1e12, 10.0, False, cfg)
    assert np.isclose(nlos / los, 10 ** (-0.5))


# -- realizations -------------------------------------------------------------

def test_single_los_path_rank_one():
    cfg = small_config(num_nlos_clusters=0, pulse_shape="rect")
    real = generate_channel(cfg, np.random.default_rng(1))
    for k in range(cfg.num_bins):
        s = np.linalg.svd(real.freq[0, k], compute_uv=False)
        assert s[1] < 1e-10 * s[0]


def test_narrowband_limit_constant_up_to_pulse():
    # single path, smooth pulse: H[k] / beta[k] constant across bins as B -> 0
    cfg = small_config(num_nlos_clusters=0, pulse_shape="rrc",
                       bandwidth_hz=1e4, noise_variance=0.05)
    real = generate_channel(cfg, np.random.default_rng(2))
    beta = pulse_coefficients(real.paths[0][0].delay, cfg)
    ratio = real.freq[0] / beta[:, None, None]
    spread = np.max(np.abs(ratio - ratio[0]))
    assert spread < 1e-6 * np.max(np.abs(ratio))


def test_taps_reproduce_frequency_response(default_cfg):
    real = generate_channel(default_cfg, np.random.default_rng(42))
    assert verify_tap_consistency(real) < 1e-9


def test_rect_on_grid_taps_supported_narrowband():
    # with the per-antenna frequency slope and the path-amplitude frequency
    # dependence both negligible, on-grid rect delays land on exactly the
    # nominal tap indices
    cfg = small_config(pulse_shape="rect", num_nlos_clusters=2,
                       bandwidth_hz=1e4)
    ts = cfg.sample_interval
    paths = [[
        PathParams(aoa=0.3, aod=-0.5, delay=0.0, d_path=cfg.distance_m,
                   is_los=True),
        PathParams(aoa=-0.8, aod=0.2, delay=ts, d_path=cfg.distance_m + 1,
                   is_los=False, phase=1.0, cluster=1, ray=1),
        PathParams(aoa=0.6, aod=0.9, delay=2 * ts, d_path=cfg.distance_m + 2,
                   is_los=False, phase=2.0, cluster=2, ray=1),
    ] for _ in range(cfg.num_users)]
    real = generate_channel(cfg, paths=paths)
    energy = np.sum(np.abs(real.taps[0]) ** 2, axis=(1, 2))
    outside = energy[cfg.channel_taps:].sum()
    assert outside < 1e-9 * energy.sum()


def test_rect_on_grid_taps_leakage_small_at_full_bandwidth():
    # at the full 10 GHz band the frequency-dependent amplitude and the
    # aperture slope leak a small but nonzero share off the nominal taps
    cfg = small_config(pulse_shape="rect", num_nlos_clusters=0)
    paths = [[PathParams(aoa=0.4, aod=0.1, delay=0.0, d_path=cfg.distance_m,
                         is_los=True)] for _ in range(cfg.num_users)]
    real = generate_channel(cfg, paths=paths)
    energy = np.sum(np.abs(real.taps[0]) ** 2, axis=(1, 2))
    outside = energy[cfg.channel_taps:].sum()
    assert outside < 1e-3 * energy.sum()


def test_zero_padded_transmission_matches_bin_products():
    cfg = small_config()
    real = generate_channel(cfg, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    k_len = cfg.num_bins
    x = np.zeros((k_len, cfg.tx_antennas_per_user), dtype=complex)
    x[:cfg.data_block_len] = (rng.standard_normal((cfg.data_block_len, 2))
                              + 1j * rng.standard_normal((cfg.data_block_len, 2)))
    r = circular_convolve(real.taps[0], x, k_len)
    r_bins = dft_sequence(r, k_len)
    x_bins = dft_sequence(x, k_len)
    ref = np.einsum("kij,kj->ki", real.freq[0], x_bins)
    assert np.linalg.norm(r_bins - ref) / np.linalg.norm(ref) < 1e-9


def test_subarray_slices_share_the_one_aperture(default_cfg):
    # each subarray block is the common response times a unit-modulus offset
    cfg = small_config(num_nlos_clusters=0)
    real = generate_channel(cfg, np.random.default_rng(5))
    n_sub = cfg.subarray_antennas
    h0 = real.freq[0, 3, :n_sub, :]
    h1 = real.freq[0, 3, n_sub:2 * n_sub, :]
    scale = h1.ravel()[0] / h0.ravel()[0]
    assert np.isclose(abs(scale), 1.0)
    assert np.allclose(h1, scale * h0)


def test_path_geometry_within_bounds(default_cfg):
    real = generate_channel(default_cfg, np.random.default_rng(6))
    for paths in real.paths:
        assert sum(p.is_los for p in paths) == 1
        for p in paths:
            assert 0 <= p.delay <= (default_cfg.channel_taps - 1) * default_cfg.sample_interval
            assert abs(p.aoa) <= ANGLE_SPREAD
            assert abs(p.aod) <= ANGLE_SPREAD
            assert p.d_path >= default_cfg.distance_m


def test_generate_reproducible(default_cfg):
    a = generate_channel(default_cfg, np.random.default_rng(9))
    b = generate_channel(default_cfg, np.random.default_rng(9))
    assert np.array_equal(a.freq, b.freq)
