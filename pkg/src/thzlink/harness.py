"""Experiment orchestration: sweep plans, Monte-Carlo execution with
reproducible per-trial streams, and CSV persistence.

Result files carry one `# created=...` timestamp line followed by
deterministic content, so two runs of the same (config, seed) differ in
that line only.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .channel import generate_channel, subcarrier_frequencies
from .config import (IDEAL, SystemConfig, default_config, from_dict, to_dict,
                     validate)
from .link import (SCHEME_DIGITAL, SCHEME_STAGE1, SCHEME_TTD, design_link,
                   evaluate_scheme)
from .metrics import nag_sweep
from .numerics import trial_rng

KIND_SE = "se-sweep"
KIND_NAG = "nag"


@dataclass
class ExperimentPlan:
    """One experiment: a config, the axes to sweep, and who gets evaluated."""
    name: str
    cfg: SystemConfig
    kind: str = KIND_SE
    snr_db: list[float] = field(default_factory=lambda: [0.0, 10.0])
    pulse_shapes: list[str] | None = None      # None: config value only
    adc_bits: list | None = None               # None: config value only
    schemes: list[str] = field(default_factory=lambda: [SCHEME_TTD])
    trials: int = 100
    seed: int = 0
    # nag-specific
    directions: int = 1024
    bins: list[int] | None = None              # None: band edges + center
    subarrays: list[int] | None = None         # None: all

    def __post_init__(self):
        if self.kind not in (KIND_SE, KIND_NAG):
            raise ValueError(f"unknown plan kind {self.kind!r}")
        if self.kind == KIND_SE and (not self.snr_db or not self.schemes):
            raise ValueError("sweep and scheme lists must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class ExperimentResult:
    columns: list[str]
    rows: list[dict]
    provenance: dict


def plan_from_dict(data: dict) -> ExperimentPlan:
    cfg = from_dict(data.get("config", {})) if data.get("config") else default_config()
    kwargs = {k: v for k, v in data.items()
              if k in {f.name for f in dataclasses.fields(ExperimentPlan)}
              and k != "cfg"}
    return ExperimentPlan(cfg=cfg, **kwargs)


def plan_to_dict(plan: ExperimentPlan) -> dict:
    data = dataclasses.asdict(plan)
    data["config"] = to_dict(plan.cfg)
    del data["cfg"]
    return data


# -- Monte-Carlo execution ---------------------------------------------------

def _bits_label(bits) -> str:
    return IDEAL if bits == IDEAL else str(bits)


def _run_se_point(args) -> tuple[tuple[int, int, int], dict]:
    """One (pulse, snr, trial) cell; returns SE per (scheme, bits)."""
    plan_data, p_idx, s_idx, trial = args
    plan = plan_from_dict(plan_data)
    pulses = plan.pulse_shapes or [plan.cfg.pulse_shape]
    bits_list = plan.adc_bits or [plan.cfg.adc_bits]
    cfg = validate(dataclasses.replace(plan.cfg, pulse_shape=pulses[p_idx]))
    noise_var = 10.0 ** (-plan.snr_db[s_idx] / 10.0)
    rng = trial_rng(plan.seed, p_idx, s_idx, trial)
    channel = generate_channel(cfg, rng)
    needs_design = any(s != SCHEME_DIGITAL for s in plan.schemes)
    design = design_link(channel, cfg, noise_var) if needs_design else None
    out = {}
    for scheme in plan.schemes:
        if scheme == SCHEME_DIGITAL:
            out[(scheme, _bits_label(IDEAL))] = evaluate_scheme(
                channel, None, scheme, cfg, noise_var=noise_var)
            continue
        for bits in bits_list:
            out[(scheme, _bits_label(bits))] = evaluate_scheme(
                channel, design, scheme, cfg, bits=bits, noise_var=noise_var)
    return (p_idx, s_idx, trial), out


def run_plan(plan: ExperimentPlan, jobs: int = 1) -> ExperimentResult:
    """Execute the plan; deterministic for a fixed (plan, seed) regardless
    of worker count."""
    if plan.kind == KIND_NAG:
        return _run_nag_plan(plan)
    pulses = plan.pulse_shapes or [plan.cfg.pulse_shape]
    tasks = [(plan_to_dict(plan), p, s, t)
             for p in range(len(pulses))
             for s in range(len(plan.snr_db))
             for t in range(plan.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_se_point, tasks, chunksize=1))
    else:
        results = dict(map(_run_se_point, tasks))

    bits_list = plan.adc_bits or [plan.cfg.adc_bits]
    rows = []
    for p_idx, pulse in enumerate(pulses):
        for s_idx, snr in enumerate(plan.snr_db):
            for scheme in plan.schemes:
                labels = ([_bits_label(IDEAL)] if scheme == SCHEME_DIGITAL
                          else [_bits_label(b) for b in bits_list])
                for label in labels:
                    samples = np.array([
                        results[(p_idx, s_idx, t)][(scheme, label)]
                        for t in range(plan.trials)])
                    se_mean = float(samples.mean())
                    se_std = float(samples.std(ddof=1)) if plan.trials > 1 else 0.0
                    rows.append({
                        "snr_db": snr,
                        "scheme": scheme,
                        "pulse": pulse,
                        "bits": label,
                        "se_mean": se_mean,
                        "se_std": se_std,
                        "rate_gbps_mean": se_mean * plan.cfg.bandwidth_hz / 1e9,
                        "rate_gbps_std": se_std * plan.cfg.bandwidth_hz / 1e9,
                        "trials": plan.trials,
                        "config_hash": plan.cfg.config_hash(),
                    })
    columns = ["snr_db", "scheme", "pulse", "bits", "se_mean", "se_std",
               "rate_gbps_mean", "rate_gbps_std", "trials", "config_hash"]
    return ExperimentResult(columns=columns, rows=rows,
                            provenance=_provenance(plan))


def _run_nag_plan(plan: ExperimentPlan) -> ExperimentResult:
    """Single-realization array-gain sweep over direction for a few bins,
    with and without delay compensation."""
    cfg = plan.cfg
    rng = trial_rng(plan.seed, 0, 0, 0)
    channel = generate_channel(cfg, rng)
    design = design_link(channel, cfg)
    combiner = design.combiner
    n_sub = cfg.subarray_antennas
    directions = np.linspace(-1.0, 1.0, plan.directions)
    bins = plan.bins or [1, (cfg.num_bins + 1) // 2, cfg.num_bins]
    subarrays = plan.subarrays or list(range(cfg.bs_rf_chains))

    rows = []
    for s_l in subarrays:
        block = combiner.rf[s_l * n_sub:(s_l + 1) * n_sub, s_l]
        theta_sine = float(np.sin(combiner.selected_angles[s_l]))
        for compensated, scheme in ((False, SCHEME_STAGE1), (True, SCHEME_TTD)):
            table = nag_sweep(block, theta_sine, cfg, directions,
                              np.array(bins), compensated)
            for row, k in enumerate(bins):
                for col, d in enumerate(directions):
                    rows.append({
                        "scheme": scheme,
                        "subarray": s_l,
                        "bin": k,
                        "direction": float(d),
                        "steer_direction": theta_sine,
                        "nag": float(table[row, col]),
                        "config_hash": cfg.config_hash(),
                    })
    columns = ["scheme", "subarray", "bin", "direction", "steer_direction",
               "nag", "config_hash"]
    return ExperimentResult(columns=columns, rows=rows,
                            provenance=_provenance(plan))


def _provenance(plan: ExperimentPlan) -> dict:
    return {
        "config_hash": plan.cfg.config_hash(),
        "seed": plan.seed,
        "version": __version__,
    }


# -- canned plans ------------------------------------------------------------

DEFAULT_SNR_GRID = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]


def plan_fig_nag(cfg: SystemConfig, seed: int = 7,
                 subarrays: list[int] | None = None) -> ExperimentPlan:
    return ExperimentPlan(name="fig2a", cfg=cfg, kind=KIND_NAG, seed=seed,
                          trials=1, subarrays=subarrays)


def plan_fig_schemes(cfg: SystemConfig, trials: int = 100, seed: int = 7,
                     snr_db=None) -> ExperimentPlan:
    return ExperimentPlan(
        name="fig2b", cfg=cfg, snr_db=list(snr_db or DEFAULT_SNR_GRID),
        schemes=[SCHEME_TTD, SCHEME_STAGE1, SCHEME_DIGITAL],
        trials=trials, seed=seed)


def plan_fig_pulses(cfg: SystemConfig, trials: int = 100, seed: int = 7,
                    snr_db=None) -> ExperimentPlan:
    return ExperimentPlan(
        name="fig2c", cfg=cfg, snr_db=list(snr_db or DEFAULT_SNR_GRID),
        pulse_shapes=["rrc", "rect"],
        schemes=[SCHEME_TTD, SCHEME_STAGE1],
        trials=trials, seed=seed)


def plan_fig_bits(cfg: SystemConfig, trials: int = 100, seed: int = 7,
                  snr_db=None) -> ExperimentPlan:
    return ExperimentPlan(
        name="fig2d", cfg=cfg, snr_db=list(snr_db or DEFAULT_SNR_GRID),
        adc_bits=[1, 2, 3, 4, IDEAL],
        schemes=[SCHEME_TTD],
        trials=trials, seed=seed)


CANNED_PLANS = {
    "fig2a": plan_fig_nag,
    "fig2b": plan_fig_schemes,
    "fig2c": plan_fig_pulses,
    "fig2d": plan_fig_bits,
}

# column subsets for the per-figure CSV contracts
FIG_COLUMNS = {
    "fig2a": ["scheme", "subarray", "bin", "direction", "steer_direction",
              "nag", "config_hash"],
    "fig2b": ["snr_db", "scheme", "se_mean", "se_std", "trials", "config_hash"],
    "fig2c": ["snr_db", "scheme", "pulse", "rate_gbps_mean", "rate_gbps_std",
              "trials", "config_hash"],
    "fig2d": ["snr_db", "bits", "se_mean", "se_std", "trials", "config_hash"],
}


# -- persistence ---------------------------------------------------------------

def result_to_csv(result: ExperimentResult, columns: list[str] | None = None,
                  timestamp: bool = True) -> str:
    columns = columns or result.columns
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# created={datetime.now(timezone.utc).isoformat()}\n")
    prov = result.provenance
    buf.write(f"# config_hash={prov['config_hash']} seed={prov['seed']} "
              f"version={prov['version']}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in result.rows:
        writer.writerow(row)
    return buf.getvalue()


def write_result(result: ExperimentResult, path, columns=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(result_to_csv(result, columns))
