"""System configuration: every dimensional, frequency, grid, gain and ADC
parameter of the simulated uplink lives here.

A config is built (or loaded from JSON), passed through :func:`validate`
which fills the derived quantities, and is immutable afterwards, so it can
be shared freely across workers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Union

from .errors import DimensionError, DivisibilityError

# ADC resolution sentinel: no quantization, unit linear gain.
IDEAL = "ideal"

PULSE_RRC = "rrc"
PULSE_RECT = "rect"

AdcBits = Union[int, str]


@dataclass(frozen=True)
class SystemConfig:
    """Full parameter set of one simulated scenario.

    Defaults reproduce the reference uplink scenario: 4 users with 4
    antennas / 2 RF chains / 2 streams each, a 96-antenna base station
    partitioned into 16 six-antenna subarrays with 2 time-delay elements
    per chain, 1 THz carrier, 10 GHz bandwidth, 128 frequency bins,
    4 channel taps, 3-bit ADCs.
    """

    num_users: int = 4
    tx_antennas_per_user: int = 4
    tx_rf_chains_per_user: int = 2
    streams_per_user: int = 2
    bs_antennas: int = 96
    bs_rf_chains: int = 16            # equals the number of subarrays
    ttd_per_chain: int = 2
    carrier_freq_hz: float = 1.0e12
    bandwidth_hz: float = 1.0e10
    num_bins: int = 128
    data_block_len: int | None = None  # defaults to num_bins - channel_taps + 1
    channel_taps: int = 4
    tx_grid_size: int = 8
    rx_grid_size: int = 12            # atoms per subarray dictionary
    tx_gain_total_dbi: float = 28.0   # summed over users
    rx_gain_dbi: float = 28.0         # per subarray
    distance_m: float = 15.0
    num_nlos_clusters: int = 3
    rays_per_cluster: int = 1
    adc_bits: AdcBits = 3
    noise_variance: float = 0.1
    symbol_variance: float = 1.0
    pulse_shape: str = PULSE_RRC
    rrc_rolloff: float = 0.3
    absorption_coeff: float = 0.0033   # molecular absorption, 1/m
    reflection_loss_db: float = -10.0  # NLoS bounce, amplitude dB
    # Rescale each user's channel by the deterministic direct-path Frobenius
    # amplitude, so noise_variance sweeps operate at a meaningful received
    # SNR.  Absolute power levels are not a calibrated output either way;
    # set False for the raw free-space scale.
    normalize_channel: bool = True
    rng_seed: int = 0
    # Derived, filled by validate():
    subarray_antennas: int | None = None
    ps_per_ttd: int | None = None
    total_streams: int | None = None

    # -- derived scalars ---------------------------------------------------

    @property
    def sample_interval(self) -> float:
        """Baseband sample period 1/B in seconds."""
        return 1.0 / self.bandwidth_hz

    @property
    def carrier_period(self) -> float:
        return 1.0 / self.carrier_freq_hz

    @property
    def total_tx_antennas(self) -> int:
        return self.num_users * self.tx_antennas_per_user

    @property
    def is_ideal_adc(self) -> bool:
        return self.adc_bits == IDEAL

    @property
    def tx_gain_amp(self) -> float:
        """Per-user transmit antenna gain as a linear amplitude factor."""
        total = 10.0 ** (self.tx_gain_total_dbi / 10.0)
        return float((total / self.num_users) ** 0.5)

    @property
    def rx_gain_amp(self) -> float:
        return float(10.0 ** (self.rx_gain_dbi / 20.0))

    @property
    def reflection_amp(self) -> float:
        return float(10.0 ** (self.reflection_loss_db / 20.0))

    def config_hash(self) -> str:
        """Short stable hash of the validated parameter set."""
        payload = json.dumps(to_dict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _require_positive(cfg: SystemConfig, names: tuple[str, ...]) -> None:
    for name in names:
        value = getattr(cfg, name)
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")


def validate(cfg: SystemConfig) -> SystemConfig:
    """Check every structural invariant and return the config with the
    derived fields (subarray size, phase shifters per delay element, total
    stream count, block length) filled in.  Idempotent."""
    _require_positive(cfg, (
        "num_users", "tx_antennas_per_user", "tx_rf_chains_per_user",
        "streams_per_user", "bs_antennas", "bs_rf_chains", "ttd_per_chain",
        "carrier_freq_hz", "bandwidth_hz", "num_bins", "channel_taps",
        "tx_grid_size", "rx_grid_size", "distance_m", "noise_variance",
        "symbol_variance",
    ))
    if cfg.num_nlos_clusters < 0:
        raise ValueError("num_nlos_clusters must be nonnegative")
    if cfg.rays_per_cluster < 0:
        raise ValueError("rays_per_cluster must be nonnegative")
    if cfg.bandwidth_hz >= 2.0 * cfg.carrier_freq_hz:
        raise ValueError("bandwidth must be below twice the carrier frequency")
    if cfg.pulse_shape not in (PULSE_RRC, PULSE_RECT):
        raise ValueError(f"unknown pulse_shape {cfg.pulse_shape!r}")
    if cfg.pulse_shape == PULSE_RRC and not 0.0 < cfg.rrc_rolloff <= 1.0:
        raise ValueError("rrc_rolloff must lie in (0, 1]")
    if cfg.adc_bits != IDEAL:
        if not isinstance(cfg.adc_bits, int) or isinstance(cfg.adc_bits, bool):
            raise ValueError(f"adc_bits must be an integer or {IDEAL!r}")
        if not 1 <= cfg.adc_bits <= 12:
            raise ValueError("adc_bits must lie in 1..12 or be 'ideal'")

    if cfg.bs_antennas % cfg.bs_rf_chains != 0:
        raise DivisibilityError(
            f"bs_antennas={cfg.bs_antennas} not divisible by "
            f"bs_rf_chains={cfg.bs_rf_chains}")
    n_sub = cfg.bs_antennas // cfg.bs_rf_chains
    if n_sub % cfg.ttd_per_chain != 0:
        raise DivisibilityError(
            f"subarray size {n_sub} not divisible by ttd_per_chain="
            f"{cfg.ttd_per_chain}")

    if cfg.streams_per_user > cfg.tx_rf_chains_per_user:
        raise DimensionError("streams_per_user exceeds tx_rf_chains_per_user")
    if cfg.tx_rf_chains_per_user > cfg.tx_antennas_per_user:
        raise DimensionError("tx_rf_chains_per_user exceeds tx_antennas_per_user")
    n_s = cfg.num_users * cfg.streams_per_user
    if n_s > cfg.bs_rf_chains:
        raise DimensionError(
            f"total streams {n_s} exceed bs_rf_chains={cfg.bs_rf_chains}")

    block_len = cfg.data_block_len
    if block_len is None:
        block_len = cfg.num_bins - cfg.channel_taps + 1
    if block_len <= 0:
        raise ValueError("data_block_len must be positive")
    if block_len + cfg.channel_taps - 1 != cfg.num_bins:
        raise ValueError(
            f"zero-padding identity violated: data_block_len={block_len} + "
            f"channel_taps-1={cfg.channel_taps - 1} != num_bins={cfg.num_bins}")

    return dataclasses.replace(
        cfg,
        data_block_len=block_len,
        subarray_antennas=n_sub,
        ps_per_ttd=n_sub // cfg.ttd_per_chain,
        total_streams=n_s,
    )


def default_config() -> SystemConfig:
    """The validated reference scenario (all dataclass defaults)."""
    return validate(SystemConfig())


# -- (de)serialization -----------------------------------------------------

_FIELD_NAMES = [f.name for f in dataclasses.fields(SystemConfig)]


def to_dict(cfg: SystemConfig) -> dict:
    return dataclasses.asdict(cfg)


def from_dict(data: dict, strict: bool = True) -> SystemConfig:
    unknown = set(data) - set(_FIELD_NAMES)
    if unknown and strict:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    kwargs = {k: v for k, v in data.items() if k in _FIELD_NAMES}
    return validate(SystemConfig(**kwargs))


def to_json(cfg: SystemConfig, path=None) -> str:
    text = json.dumps(to_dict(cfg), indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def from_json(source) -> SystemConfig:
    """Load from a JSON string or a file path."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return from_dict(json.loads(source))
    with open(source) as fh:
        return from_dict(json.load(fh))


def apply_overrides(cfg: SystemConfig, overrides: list[str]) -> SystemConfig:
    """Apply ``key=value`` override strings (values parsed as JSON when
    possible, else kept as raw strings) and re-validate."""
    data = to_dict(cfg)
    touched = set()
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} is not of the form key=value")
        if key not in _FIELD_NAMES:
            raise ValueError(f"unknown config field {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data[key] = value
        touched.add(key)
    # rederive instead of trusting stale derived fields
    for name in ("subarray_antennas", "ps_per_ttd", "total_streams"):
        data[name] = None
    if touched & {"num_bins", "channel_taps"} and "data_block_len" not in touched:
        data["data_block_len"] = None
    return from_dict(data)
