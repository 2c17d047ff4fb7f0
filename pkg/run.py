#!/usr/bin/env python3
"""
Laser OWC Rate-Splitting Simulation Runner

Entry point for Monte Carlo sweeps, single power-allocation runs and
channel dumps.

Usage:
    python run.py simulate --config config/scenario/default.yaml --settings config/config.yaml \\
        --sweep snr --from 5 --to 35 --step 5 --out results/snr.csv
    python run.py optimize --config config/scenario/default.yaml --snr 15 --users 4 --out alloc.csv
    python run.py channel --config config/scenario/default.yaml --users 4 --seed 42 --out channel.csv

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible,
3 optimizer stopped before reaching a stationary point.
"""

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from sim.channel import build_channel, channel_to_frame, normalize_channel
from sim.config import (
    RunSettings,
    config_hash,
    load_yaml,
    noise_from_config,
    override,
    scene_from_config,
    settings_from_config,
)
from sim.engine import SweepEngine
from sim.errors import ConfigError, InfeasibleError, OwcError
from sim.geometry import place_users_random, user_positions
from sim.hrs import default_groups, grouping_to_frame, kmeans_group
from sim.kpi import emit_csv, print_summary, write_parquet
from sim.models import Scheme, SweepAxis
from sim.optimizer import optimize_hrs
from sim.precoding import hrs_precoders

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_CONVERGED = 3

SWEEP_AXES = {
    "snr": SweepAxis.SNR_DB,
    "beam_waist": SweepAxis.BEAM_WAIST_UM,
    "users": SweepAxis.NUM_USERS,
}

# (from, to, step) used when a sweep gives no values
DEFAULT_RANGES = {
    SweepAxis.SNR_DB: (5.0, 35.0, 5.0),
    SweepAxis.BEAM_WAIST_UM: (5.0, 30.0, 5.0),
    SweepAxis.NUM_USERS: (2.0, 12.0, 1.0),
}


class CliParser(argparse.ArgumentParser):
    """Argument parser that exits with the usage-error code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def create_run_id() -> str:
    """Generate unique run ID based on timestamp."""
    now = datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%d_%H%M%SZ")


def meta_path(out: str | Path) -> Path:
    """Metadata sidecar of an output CSV."""
    return Path(out).with_suffix(".meta.jsonl")


def groups_path(out: str | Path) -> Path:
    """Grouping sidecar of an allocation CSV."""
    return Path(out).with_suffix(".groups.csv")


def sweep_values(axis: SweepAxis, values: str | None, start, stop, step) -> list[float]:
    """Axis values from --values or an inclusive --from/--to/--step range."""
    if values:
        try:
            return [float(v) for v in values.split(",")]
        except ValueError as e:
            raise ConfigError(f"invalid --values: {values}") from e
    d_start, d_stop, d_step = DEFAULT_RANGES[axis]
    start = d_start if start is None else start
    stop = d_stop if stop is None else stop
    step = d_step if step is None else step
    if step <= 0 or stop < start:
        raise ConfigError("need --step > 0 and --to >= --from")
    n = int(round((stop - start) / step))
    return [start + i * step for i in range(n + 1) if start + i * step <= stop + 1e-9 * step]


def parse_schemes(text: str | None) -> tuple[Scheme, ...] | None:
    """Comma-separated scheme names, case-insensitive."""
    if text is None:
        return None
    try:
        return tuple(Scheme(name.strip().upper()) for name in text.split(",") if name.strip())
    except ValueError as e:
        raise ConfigError(f"unknown scheme in --schemes {text!r}; choose from OMA,RS,HRS,HRS_OPT") from e


def load_settings(args: argparse.Namespace) -> RunSettings:
    """Settings file (if any) with command-line overrides applied."""
    settings = settings_from_config(load_yaml(args.settings)) if args.settings else RunSettings()
    settings = override(
        settings,
        alpha=args.alpha,
        beta=args.beta,
        groups=args.groups,
        seed=args.seed,
        snr_db=args.snr,
        trials=getattr(args, "trials", None),
        workers=getattr(args, "workers", None),
    )
    optimizer = settings.optimizer
    for flag, name in (("p_min", "p_min"), ("p_max", "p_max"), ("r_min", "r_min")):
        value = getattr(args, flag, None)
        if value is not None:
            optimizer = replace(optimizer, **{name: value})
    return replace(settings, optimizer=optimizer)


def place_users(scene, k: int, seed: int):
    """Users of trial 0 of a sweep with the same seed."""
    return place_users_random(scene, k, np.random.SeedSequence(seed, spawn_key=(0, 0)))


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a Monte Carlo sweep and write the CSV."""
    say = (lambda *a, **k: None) if args.quiet else print
    scene_cfg = load_yaml(args.config)
    scene = scene_from_config(scene_cfg)
    noise = noise_from_config(scene_cfg)
    settings = load_settings(args)
    axis = SWEEP_AXES[args.sweep]
    values = sweep_values(axis, args.values, args.start, args.stop, args.step)
    spec = settings.sweep_spec(axis, values, parse_schemes(args.schemes), num_users=args.users or 4)

    run_id = create_run_id()
    say(f"Initializing sweep: {run_id}")
    say(f"  Room: {scene.room.length}x{scene.room.width}x{scene.room.height} m, APs: {scene.num_aps} "
        f"({scene.vcsel_layout.value}, {scene.aps[0].vcsels_per_ap} VCSELs each)")
    say(f"  Axis: {axis.value} = {', '.join(f'{v:g}' for v in spec.values)}")
    say(f"  Schemes: {', '.join(s.value for s in spec.schemes)}")
    say(f"  Trials: {spec.trials} per point, seed {spec.seed}, workers {settings.workers}")
    say("Running sweep...")

    def progress(value: float, feasible: int, trials: int) -> None:
        say(f"  {axis.value}={value:g}: {feasible}/{trials} trials feasible")

    started_at = datetime.now(timezone.utc)
    engine = SweepEngine(spec, scene, noise, workers=settings.workers, progress=progress)
    records = engine.run()
    ended_at = datetime.now(timezone.utc)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_csv(records, out)
    say(f"Saved results: {out}")
    if args.parquet:
        write_parquet(records, args.parquet)
        say(f"Saved record table: {args.parquet}")

    skipped = {(r.axis_value, r.trial) for r in records if r.skipped}
    meta = {
        "run_id": run_id,
        "command": "simulate",
        "config_hash": config_hash({"scene": scene_cfg, "settings": str(settings), "axis": axis.value,
                                    "values": list(spec.values)}),
        "seed": spec.seed,
        "started_at": started_at.isoformat(),
        "ended_at": ended_at.isoformat(),
        "duration_sec": (ended_at - started_at).total_seconds(),
        "num_records": len(records),
        "num_skipped": len(skipped),
    }
    with open(meta_path(out), "w", encoding="utf-8") as f:
        f.write(json.dumps(meta) + "\n")
    say(f"Saved metadata: {meta_path(out)}")

    if not args.quiet:
        print_summary(records)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    """Optimize the HRS power allocation of one seeded placement."""
    say = (lambda *a, **k: None) if args.quiet else print
    scene_cfg = load_yaml(args.config)
    scene = scene_from_config(scene_cfg)
    noise = noise_from_config(scene_cfg)
    settings = load_settings(args)
    k = args.users or 4
    g = settings.groups or default_groups(k)

    placed = place_users(scene, k, settings.seed)
    channel, power = normalize_channel(build_channel(placed, noise), settings.snr_db)
    seed = int(np.random.SeedSequence(settings.seed, spawn_key=(0, 0)).generate_state(1)[0])
    grouping = kmeans_group(user_positions(placed), g, seed)
    precoders = hrs_precoders(channel.gains, grouping, settings.common_strategy)
    say(f"Optimizing: K={k}, G={g}, SNR={settings.snr_db:g} dB, seed {settings.seed}")
    allocation, rates = optimize_hrs(
        channel, grouping, precoders, power, settings.alpha, settings.beta, settings.optimizer
    )

    rows = [
        {"message": "inner_common", "group_index": gi, "user_index": pd.NA, "power": p, "rate_bps_hz": r}
        for gi, (p, r) in enumerate(zip(allocation.p_inner_common, rates.r_inner_common))
    ]
    rows += [
        {"message": "private", "group_index": int(grouping.assignments[ki]), "user_index": ki, "power": p,
         "rate_bps_hz": r}
        for ki, (p, r) in enumerate(zip(allocation.p_private, rates.r_private))
    ]
    rows.append(
        {"message": "sum", "group_index": pd.NA, "user_index": pd.NA, "power": float(allocation.powers.sum()),
         "rate_bps_hz": rates.sum_rate}
    )
    df = pd.DataFrame(rows).astype({"group_index": "Int64", "user_index": "Int64"})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out, index=False, float_format="%.15g", na_rep="", lineterminator="\n")
    grouping_to_frame(grouping).to_csv(groups_path(out), index=False, float_format="%.15g", lineterminator="\n")

    say(f"  Sum rate: {rates.sum_rate:.4f} bits/s/Hz, objective {allocation.objective_value:.6f}")
    say(f"  Outer iterations: {allocation.iterations}, converged: {allocation.converged}")
    say(f"Saved allocation: {out} (groups: {groups_path(out)})")
    if not allocation.feasible:
        print("Error: minimum sum rate not reached", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK if allocation.converged else EXIT_NOT_CONVERGED


def cmd_channel(args: argparse.Namespace) -> int:
    """Write the physical channel matrix of one seeded placement."""
    say = (lambda *a, **k: None) if args.quiet else print
    scene_cfg = load_yaml(args.config)
    scene = scene_from_config(scene_cfg)
    noise = noise_from_config(scene_cfg)
    seed = 42 if args.seed is None else args.seed
    placed = place_users(scene, args.users or 4, seed)
    channel = build_channel(placed, noise)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    channel_to_frame(channel).to_csv(out, index=False, float_format="%.15g", lineterminator="\n")
    say(f"Channel: {channel.num_users} users x {channel.num_tx} transmit elements")
    if channel.uncovered:
        say(f"  Uncovered users: {', '.join(str(u) for u in channel.uncovered)}")
    say(f"Saved channel: {out}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Path to scene YAML file")
    parser.add_argument("--settings", default=None, help="Path to settings YAML file")
    parser.add_argument("--users", type=int, default=None, help="Number of users K (default 4)")
    parser.add_argument("--groups", type=int, default=None, help="Number of HRS groups G")
    parser.add_argument("--alpha", type=float, default=None, help="Private power fraction")
    parser.add_argument("--beta", type=float, default=None, help="Group message power fraction")
    parser.add_argument("--seed", type=int, default=None, help="Random seed for reproducibility")
    parser.add_argument("--snr", type=float, default=None, help="Normalized SNR in dB")
    parser.add_argument("--out", required=True, help="Output CSV path")
    parser.add_argument("--quiet", action="store_true", help="Suppress progress output")


def build_parser() -> CliParser:
    """Command-line interface of the simulator."""
    parser = CliParser(description="Laser OWC rate-splitting simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Run a Monte Carlo sweep")
    _add_common(sim)
    sim.add_argument("--sweep", choices=sorted(SWEEP_AXES), default="snr", help="Swept parameter")
    sim.add_argument("--from", dest="start", type=float, default=None, help="First axis value")
    sim.add_argument("--to", dest="stop", type=float, default=None, help="Last axis value (inclusive)")
    sim.add_argument("--step", type=float, default=None, help="Axis step")
    sim.add_argument("--values", default=None, help="Comma-separated axis values (overrides --from/--to/--step)")
    sim.add_argument("--schemes", default=None, help="Comma-separated subset of OMA,RS,HRS,HRS_OPT")
    sim.add_argument("--trials", type=int, default=None, help="Trials per axis value")
    sim.add_argument("--workers", type=int, default=None, help="Parallel trial workers")
    sim.add_argument("--parquet", default=None, help="Also write the full record table as parquet")
    sim.set_defaults(handler=cmd_simulate)

    opt = sub.add_parser("optimize", help="Optimize the HRS power allocation of one placement")
    _add_common(opt)
    opt.add_argument("--p-min", dest="p_min", type=float, default=None, help="Minimum summed private power")
    opt.add_argument("--p-max", dest="p_max", type=float, default=None, help="Maximum summed private power")
    opt.add_argument("--r-min", dest="r_min", type=float, default=None, help="Minimum sum rate (bits/s/Hz)")
    opt.set_defaults(handler=cmd_optimize)

    ch = sub.add_parser("channel", help="Write the channel matrix of one placement")
    ch.add_argument("--config", required=True, help="Path to scene YAML file")
    ch.add_argument("--users", type=int, default=None, help="Number of users K (default 4)")
    ch.add_argument("--seed", type=int, default=None, help="Random seed (default 42)")
    ch.add_argument("--out", required=True, help="Output CSV path")
    ch.add_argument("--quiet", action="store_true", help="Suppress progress output")
    ch.set_defaults(handler=cmd_channel)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    """
    Run the command line and return its exit code.

    Args:
        argv: Arguments without the program name (default sys.argv[1:])

    Returns:
        Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except InfeasibleError as e:
        print(f"Infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OwcError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    """Main entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
