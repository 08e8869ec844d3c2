"""
Tethered UAV Simulator - command line

Subcommands:
    run        run a built-in scenario, optionally overridden by a config file
    metrics    compute metrics from an exported telemetry CSV
    scenarios  list the built-in scenarios
    batch      run several config files in parallel processes

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 numerical failure, 4 infeasible tether geometry.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'src'))

from configuration.run_config import RunConfigParser
from reporting.telemetry_export import (
    RunManifest,
    export_csv,
    export_frames,
    export_metrics,
    read_csv,
)
from scenarios.builtin import get_scenario, list_scenarios
from simulation.metrics import Metrics, compute_metrics, metrics_from_table
from simulation.sim_engine import run_closed_loop
from tuav_errors import TuavError


DEFAULT_OUT = "tuav_out"


def default_out_dir() -> str:
    return os.environ.get("TUAV_OUT", DEFAULT_OUT)


def print_banner(title: str):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def print_metrics(metrics: Metrics):
    print(f"\n{'Channel':<10} {'Settling (s)':>14} {'Final |e|':>14} {'RMS':>14}")
    print("-" * 56)
    for name, settled in metrics.settling_time.items():
        settled_text = f"{settled:.3f}" if settled is not None else "unsettled"
        print(f"{name:<10} {settled_text:>14} "
              f"{metrics.steady_state_error[name]:>14.3e} {metrics.rms_error[name]:>14.3e}")
    print("-" * 56)
    for name, value in metrics.max_dV_step.items():
        print(f"max d{name}/dt: {value:.3e} (step)  {metrics.max_dV_central[name]:.3e} (central)")


# ============================================================
# RUN
# ============================================================

def run_scenario(
    scenario_name: str,
    out_dir: str,
    config_path: Optional[str] = None,
    name: Optional[str] = None,
    stride: int = 100,
    samples: int = 50,
    frames: bool = True
) -> int:
    """
    Run one scenario and export its telemetry

    Returns:
        Process exit code
    """
    scenario = get_scenario(scenario_name)
    parser = RunConfigParser()
    parser.update(scenario.settings)
    if config_path:
        parser.parse_file(config_path)
    config = parser.build()

    manifest = RunManifest(
        scenario=name or scenario.name,
        out_dir=out_dir,
        config_path=config_path,
        export_frames=frames,
    )
    manifest.prepare()

    print_banner(f"Running scenario: {scenario.name}")
    print(f"{scenario.description}")
    print(f"dt = {config.dt:g} s, duration = {config.duration:g} s, integrator = {config.integrator.value}")

    try:
        log = run_closed_loop(config)
    except TuavError as e:
        print(f"\n✗ Run failed: {e}")
        if e.log is not None and len(e.log) > 0:
            partial = manifest.path("_partial.csv")
            export_csv(e.log, partial)
            print(f"  Partial log ({len(e.log)} rows) saved to {partial}")
        return e.exit_code

    rows = export_csv(log, manifest.csv_path)
    print(f"\n✓ {rows} rows exported to {manifest.csv_path}")
    if manifest.export_frames:
        count = export_frames(log, manifest.frames_path, stride=stride, samples=samples)
        print(f"✓ {count} frames exported to {manifest.frames_path}")

    metrics = compute_metrics(log, transient=scenario.transient)
    export_metrics(metrics, manifest.metrics_path)
    print(f"✓ Metrics exported to {manifest.metrics_path}")
    manifest.write()

    for event in log.events:
        print(f"  [{event.t:8.3f} s] {event.kind}: {event.detail}")
    print_metrics(metrics)
    return 0


def run_config_file(args: Tuple[str, str, str]) -> Tuple[str, int]:
    """Batch worker: (config path, scenario, output directory) -> (config path, exit code)"""
    config_path, scenario_name, out_dir = args
    name = os.path.splitext(os.path.basename(config_path))[0]
    try:
        code = run_scenario(scenario_name, out_dir, config_path=config_path, name=name)
    except TuavError as e:
        print(f"✗ {config_path}: {e}")
        code = e.exit_code
    except OSError as e:
        print(f"✗ {config_path}: I/O error: {e}")
        code = 2
    return config_path, code


# ============================================================
# COMMANDS
# ============================================================

def cmd_run(args) -> int:
    return run_scenario(
        args.scenario,
        args.out or default_out_dir(),
        config_path=args.config,
        name=args.name,
        stride=args.stride,
        samples=args.samples,
        frames=not args.no_frames,
    )


def cmd_metrics(args) -> int:
    print_banner(f"Metrics: {args.log}")
    table = read_csv(args.log)
    metrics = metrics_from_table(table, transient=args.transient)
    print_metrics(metrics)
    if metrics.unsettled:
        print(f"\n✗ Unsettled channels: {', '.join(metrics.unsettled)}")
    else:
        print("\n✓ All channels settled")
    return 0


def cmd_scenarios(args) -> int:
    print_banner("Built-in scenarios")
    for scenario in list_scenarios():
        print(f"  {scenario.name:<14} {scenario.description}")
    return 0


def cmd_batch(args) -> int:
    out_dir = args.out or default_out_dir()
    jobs = [(path, args.scenario, os.path.join(out_dir, os.path.splitext(os.path.basename(path))[0]))
            for path in args.configs]
    print_banner(f"Batch: {len(jobs)} runs, {args.jobs} workers")
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(run_config_file, jobs))

    worst = 0
    for path, code in results:
        mark = "✓" if code == 0 else "✗"
        print(f"{mark} {path} (exit {code})")
        if code and not worst:
            worst = code
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tuav_sim",
        description="Closed-loop simulator for a tethered UAV and its ground winch",
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a scenario and export telemetry")
    run.add_argument("--config", help="config file overriding the scenario settings")
    run.add_argument("--out", help="output directory (default: $TUAV_OUT or ./tuav_out)")
    run.add_argument("--scenario", default="setpoint", help="built-in scenario (default: setpoint)")
    run.add_argument("--name", help="basename of the output files (default: scenario name)")
    run.add_argument("--stride", type=int, default=100, help="ticks between exported frames")
    run.add_argument("--samples", type=int, default=50, help="points per tether polyline")
    run.add_argument("--no-frames", action="store_true", help="skip frame export")
    run.add_argument("--verbose", action="store_true", help="log run progress")
    run.set_defaults(func=cmd_run)

    metrics = sub.add_parser("metrics", help="metrics of an exported CSV")
    metrics.add_argument("--log", required=True, help="telemetry CSV")
    metrics.add_argument("--transient", type=float, help="start of the RMS window, s")
    metrics.set_defaults(func=cmd_metrics)

    scenarios = sub.add_parser("scenarios", help="list built-in scenarios")
    scenarios.set_defaults(func=cmd_scenarios)

    batch = sub.add_parser("batch", help="run config files in parallel")
    batch.add_argument("--configs", nargs="+", required=True, help="config files")
    batch.add_argument("--out", help="output directory, one subdirectory per config")
    batch.add_argument("--scenario", default="setpoint", help="scenario the configs override")
    batch.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    batch.set_defaults(func=cmd_batch)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command is None:
        parser.print_usage()
        return 2

    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.func(args)
    except TuavError as e:
        print(f"\n✗ {type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        print(f"\n✗ I/O error: {e}")
        return 2
    except Exception as e:
        print(f"\n✗ Unexpected error: {e}")
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
