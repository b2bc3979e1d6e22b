import numpy as np
import pytest
from hypothesis import settings

from thzlink.config import SystemConfig, validate

settings.register_profile("suite", deadline=None, max_examples=25)
settings.load_profile("suite")


def small_config(**overrides) -> SystemConfig:
    """A fast 8-antenna / 2-subarray / 8-bin scenario for unit tests."""
    base = dict(
        num_users=2, tx_antennas_per_user=2, tx_rf_chains_per_user=1,
        streams_per_user=1, bs_antennas=8, bs_rf_chains=2, ttd_per_chain=2,
        num_bins=8, data_block_len=None, channel_taps=3, tx_grid_size=4,
        rx_grid_size=5, num_nlos_clusters=2, rays_per_cluster=1,
        adc_bits="ideal", noise_variance=0.05, pulse_shape="rect",
        rng_seed=0)
    base.update(overrides)
    return validate(SystemConfig(**base))


@pytest.fixture(scope="session")
def default_cfg():
    from thzlink.config import default_config
    return default_config()


@pytest.fixture(scope="session")
def seed7_channel(default_cfg):
    from thzlink.channel import generate_channel
    return generate_channel(default_cfg, np.random.default_rng(7))


@pytest.fixture(scope="session")
def seed7_design(default_cfg, seed7_channel):
    from thzlink.link import design_link
    return design_link(seed7_channel, default_cfg)
