#!/usr/bin/env python3
"""
Command-line entry point for phasealign.

    python phasealign.py run --config <path> [--seed N] --out <path> [--format csv|json] [--quiet]
    python phasealign.py compare --config <path> [--seed N] --out <dir> [--quiet]
    python phasealign.py sweep --config <path> [--seed N] --out <path> [--quiet]

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numeric error.
"""

import argparse
import csv
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from config import ExperimentSpec, get_log_level, grid_points, load_config, with_overrides
from errors import (
    ConfigError,
    DegenerateChannelError,
    InvalidArgumentError,
    NumericInconsistencyError,
    PhaseAlignError,
)
from harness import ExperimentHarness, run_comparison
from trace_sink import format_float, save_json, save_trace_csv

logger = logging.getLogger("phasealign")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

SWEEP_COLUMNS = [
    "trials",
    "completed",
    "fraction_reached",
    "mean_final_normalized_rss",
    "median_final_normalized_rss",
    "std_final_normalized_rss",
    "mean_slots_to_threshold",
    "median_slots_to_threshold",
]


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_VALIDATION."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CommandParser(
        prog="phasealign",
        description="Monte-Carlo benchmark of distributed beamforming phase alignment (DDSA vs one-bit feedback).",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sub: argparse.ArgumentParser, out_help: str) -> None:
        sub.add_argument("--config", required=True, help="Path to the JSON experiment config")
        sub.add_argument("--seed", type=int, default=None, help="Override master_seed")
        sub.add_argument("--out", required=True, help=out_help)
        sub.add_argument("--quiet", action="store_true", help="Only report warnings and errors")

    run = subparsers.add_parser("run", help="Run one experiment")
    add_common(run, "Output file (trace CSV or full JSON)")
    run.add_argument("--format", choices=["csv", "json"], default="csv",
                     help="csv: trace CSV plus <out>.summary.json; json: one JSON document")

    compare = subparsers.add_parser("compare", help="Run DDSA and one-bit on paired seeds")
    add_common(compare, "Output directory")

    sweep = subparsers.add_parser("sweep", help="Run every point of the config's grid")
    add_common(sweep, "Output CSV with one summary row per grid point")

    return parser


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def _load_spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_config(args.config)
    if args.seed is not None:
        spec = with_overrides(spec, master_seed=args.seed)
    return spec


def _command_run(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    _say(args.quiet, f"🔍 Running {spec.trials} {spec.algorithm} trials with N_s={spec.n_transmitters}...")

    harness = ExperimentHarness(spec, show_progress=not args.quiet)
    report = harness.run_experiment()
    strategy = harness.strategy.to_dict(spec)

    if args.format == "json":
        save_json(report.to_dict(strategy), args.out)
        _say(args.quiet, f"🎉 Results saved to {args.out}")
    else:
        save_trace_csv(report.traces, args.out)
        summary_path = f"{args.out}.summary.json"
        save_json(report.summary_dict(strategy), summary_path)
        _say(args.quiet, f"🎉 Traces saved to {args.out}, summary saved to {summary_path}")

    _say(args.quiet, f"📈 Fraction reaching threshold: {report.aggregate['fraction_reached']:.3f}")
    return _report_status(report.failures)


def _command_compare(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    _say(args.quiet, f"🔍 Comparing ddsa and onebit over {spec.trials} paired trials...")

    comparison = run_comparison(spec, show_progress=not args.quiet)
    os.makedirs(args.out, exist_ok=True)

    for name, report in (("ddsa", comparison.ddsa), ("onebit", comparison.onebit)):
        save_trace_csv(report.traces, os.path.join(args.out, f"{name}_traces.csv"))
        save_json(report.summary_dict(), os.path.join(args.out, f"{name}_summary.json"))

    with open(os.path.join(args.out, "comparison.csv"), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["trial", "ddsa_slots", "onebit_slots", "ddsa_wins"])
        for row in comparison.rows:
            writer.writerow([
                row["trial"],
                _render(row["ddsa_slots"]),
                _render(row["onebit_slots"]),
                int(row["ddsa_wins"]),
            ])
    save_json(comparison.to_dict(), os.path.join(args.out, "comparison.json"))

    _say(args.quiet, f"📊 DDSA win fraction: {comparison.win_fraction:.3f} over {len(comparison.rows)} pairs")
    _say(args.quiet, f"🎉 Comparison saved to {args.out}")
    return _report_status(comparison.ddsa.failures + comparison.onebit.failures)


def _command_sweep(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    if not spec.grid:
        raise ConfigError("sweep needs a non-empty 'grid' in the config", field="grid")
    points = grid_points(spec)
    keys = list(spec.grid)
    _say(args.quiet, f"🔍 Sweeping {len(points)} grid points over {', '.join(keys)}...")

    rows: List[List[str]] = []
    failures: List[Dict[str, Any]] = []
    for point, point_spec in points:
        report = ExperimentHarness(point_spec, show_progress=not args.quiet).run_experiment()
        failures.extend(report.failures)
        rows.append([_render(point[key]) for key in keys] + _sweep_row(report.aggregate))
        _say(args.quiet, f"📈 {point}: mean final normalized RSS "
                         f"{_render(_stat(report.aggregate, 'final_normalized_rss', 'mean'))}")

    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(keys + SWEEP_COLUMNS)
        writer.writerows(rows)

    _say(args.quiet, f"🎉 Sweep saved to {args.out}")
    return _report_status(failures)


def _stat(aggregate: Dict[str, Any], block: str, key: str) -> Optional[float]:
    stats = aggregate.get(block)
    return None if stats is None else stats[key]


def _sweep_row(aggregate: Dict[str, Any]) -> List[str]:
    return [
        _render(aggregate["trials"]),
        _render(aggregate["completed"]),
        _render(aggregate["fraction_reached"]),
        _render(_stat(aggregate, "final_normalized_rss", "mean")),
        _render(_stat(aggregate, "final_normalized_rss", "median")),
        _render(_stat(aggregate, "final_normalized_rss", "std")),
        _render(_stat(aggregate, "slots_to_threshold", "mean")),
        _render(_stat(aggregate, "slots_to_threshold", "median")),
    ]


def _render(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _report_status(failures: List[Dict[str, Any]]) -> int:
    if not failures:
        return EXIT_OK
    for failure in failures:
        print(f"error: trial {failure['trial_index']} failed: {failure['error']}: {failure['message']}",
              file=sys.stderr)
    return EXIT_NUMERIC


COMMANDS = {
    "run": _command_run,
    "compare": _command_compare,
    "sweep": _command_sweep,
}


def run_command(args: argparse.Namespace) -> int:
    """Execute a parsed invocation and map failures onto exit codes.

    Args:
        args: Parsed command-line arguments

    Returns:
        Process exit status
    """
    try:
        return COMMANDS[args.subcommand](args)
    except (ConfigError, InvalidArgumentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (NumericInconsistencyError, DegenerateChannelError, ArithmeticError) as e:
        print(f"error: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except PhaseAlignError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else get_log_level(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
