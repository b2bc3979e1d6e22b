"""Command-line harness.

Subcommands: `run <plan.json>` for arbitrary sweep plans, `fig2a..fig2d`
for the canned experiment set, and `dump-channel` / `dump-delays` /
`dump-codebook` for inspecting intermediate artifacts.  Usage problems
exit with status 2, runtime failures with 1 and a machine-readable
``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .channel import generate_channel
from .config import (IDEAL, apply_overrides, default_config, from_json,
                     to_dict)
from .harness import (CANNED_PLANS, FIG_COLUMNS, plan_from_dict, run_plan,
                      write_result)
from .link import design_link
from .numerics import trial_rng
from .quantization import lloyd_max_codebook
from .stage2 import ttd_networks


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config field")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default=None, help="output path")


def _load_config(args) -> "SystemConfig":
    cfg = from_json(args.config) if args.config else default_config()
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzlink",
        description="Wideband THz MU-MIMO uplink experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a JSON experiment plan")
    p_run.add_argument("plan", help="plan JSON file")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", default=None)

    for name in ("fig2a", "fig2b", "fig2c", "fig2d"):
        p = sub.add_parser(name, help=f"run the canned {name} experiment")
        _add_common(p)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--jobs", type=int, default=1)
        if name == "fig2a":
            p.add_argument("--subarray", type=int, default=None,
                           help="restrict to one subarray (default: all)")

    p_ch = sub.add_parser("dump-channel",
                          help="write one channel realization to npz + csv")
    _add_common(p_ch)

    p_dl = sub.add_parser("dump-delays",
                          help="write the designed per-chain delay tables")
    _add_common(p_dl)

    p_cb = sub.add_parser("dump-codebook",
                          help="write one quantizer codebook as csv")
    p_cb.add_argument("bits", type=int)
    p_cb.add_argument("--out", default=None)
    return parser


def _cmd_run(args) -> int:
    try:
        with open(args.plan) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        print(f"error: plan file not found: {args.plan}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: plan file is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    plan = plan_from_dict(data)
    result = run_plan(plan, jobs=args.jobs)
    out = args.out or f"{plan.name}.csv"
    write_result(result, out)
    print(f"wrote {len(result.rows)} rows to {out}")
    return 0


def _cmd_fig(args) -> int:
    cfg = _load_config(args)
    kwargs = {"seed": args.seed}
    if args.command != "fig2a":
        kwargs["trials"] = args.trials
    elif args.subarray is not None:
        kwargs["subarrays"] = [args.subarray]
    plan = CANNED_PLANS[args.command](cfg, **kwargs)
    result = run_plan(plan, jobs=getattr(args, "jobs", 1))
    out = args.out or f"{args.command}.csv"
    write_result(result, out, columns=FIG_COLUMNS[args.command])
    print(f"wrote {len(result.rows)} rows to {out}")
    return 0


def _cmd_dump_channel(args) -> int:
    cfg = _load_config(args)
    rng = trial_rng(args.seed, 0, 0, 0)
    real = generate_channel(cfg, rng)
    prefix = args.out or "channel"
    np.savez_compressed(f"{prefix}.npz", freq=real.freq, taps=real.taps)
    with open(f"{prefix}.paths.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user", "cluster", "ray", "is_los", "aoa_rad",
                         "aod_rad", "delay_s", "path_len_m", "phase_rad"])
        for u, paths in enumerate(real.paths):
            for p in paths:
                writer.writerow([u, p.cluster, p.ray, int(p.is_los), p.aoa,
                                 p.aod, p.delay, p.d_path, p.phase])
    print(f"wrote {prefix}.npz and {prefix}.paths.csv")
    return 0


def _cmd_dump_delays(args) -> int:
    cfg = _load_config(args)
    rng = trial_rng(args.seed, 0, 0, 0)
    channel = generate_channel(cfg, rng)
    design = design_link(channel, cfg)
    nets = ttd_networks(design.combiner.selected_angles, cfg.ps_per_ttd,
                        cfg.ttd_per_chain, cfg.carrier_period)
    out = args.out or "delays.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chain", "element", "theta_sine", "delay_s"])
        for net in nets:
            for m, delay in enumerate(net.delays, start=1):
                writer.writerow([net.chain + 1, m, net.theta_sine, delay])
    print(f"wrote {out}")
    return 0


def _cmd_dump_codebook(args) -> int:
    levels, boundaries = lloyd_max_codebook(args.bits)
    out = args.out or f"codebook_b{args.bits}.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "level", "upper_boundary"])
        for i, level in enumerate(levels):
            upper = boundaries[i] if i < len(boundaries) else np.inf
            writer.writerow([i, repr(float(level)), repr(float(upper))])
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "fig2a": _cmd_fig,
        "fig2b": _cmd_fig,
        "fig2c": _cmd_fig,
        "fig2d": _cmd_fig,
        "dump-channel": _cmd_dump_channel,
        "dump-delays": _cmd_dump_delays,
        "dump-codebook": _cmd_dump_codebook,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
