#!/usr/bin/env python3
"""
Command-line interface for GraviCollapse

    gravicollapse <subcommand> [--config FILE] [--seed N] [--out DIR]
                               [--log-level LEVEL] [--progress] [--workers N]

Exit codes: 0 success, 2 configuration or parse error, 3 numerical error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..core.errors import ConfigError, GraviCollapseError
from ..core.reports import __version__
from ..core.scenarios import run_scenario
from ..utils.config import Config
from ..utils.export import emit_report, jsonable
from ..utils.logger_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = ConfigError.exit_code
EXIT_NUMERICAL = GraviCollapseError.exit_code

# subcommand -> scenario name in the configuration
SUBCOMMANDS = {
    "kernel": "kernel-dump",
    "tg": "tg-sweep",
    "sne-evolve": "sne-evolve",
    "sne-ground": "sne-ground",
    "frsne-relax": "frsne-relax",
    "vnne": "vnne",
    "unravel": "unravel-ensemble",
    "cat": "cat-collapse",
    "pointer-relax": "pointer-relax",
    "units": "units",
    "point-limit": "point-limit",
}

HELP = {
    "kernel": "dump U(d) with its asymptotes and check the closed form",
    "tg": "decoherence times across masses, radii and separations",
    "sne-evolve": "real-time Schroedinger-Newton evolution of a packet",
    "sne-ground": "Schroedinger-Newton soliton by imaginary-time relaxation",
    "frsne-relax": "frictional Schroedinger-Newton relaxation of a packet",
    "vnne": "master-equation decoherence of a cat state",
    "unravel": "stochastic ensembles against the master equation",
    "cat": "collapse statistics of a cat state under the stochastic equation",
    "pointer-relax": "pointer-state formation next to the reversible evolution",
    "units": "characteristic scales and internal units of the configured ball",
    "point-limit": "soliton width and decoherence rate as the softening shrinks",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravicollapse",
        description="Gravity-related decoherence and collapse of massive superpositions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario configuration (flat JSON)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="output directory (default: output_dir from the config)")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    common.add_argument("--workers", type=int, help="worker threads for ensembles")
    common.add_argument("--progress", action="store_true", default=None, help="show a progress bar")

    subparsers = parser.add_subparsers(dest="command", metavar="<subcommand>")
    subparsers.required = True
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def load_scenario(args: argparse.Namespace):
    """Configuration file (or defaults) with the subcommand and CLI overrides applied"""
    config = Config(args.config)
    return config.scenario_config().with_overrides(
        scenario=SUBCOMMANDS[args.command],
        seed=args.seed,
        output_dir=args.out,
        log_level=args.log_level,
        workers=args.workers,
        progress=args.progress,
    )


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the scenario and write its report; returns the exit code"""
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args)
        setup_logging(scenario.log_level, scenario.log_file)
    except ConfigError as e:
        print(f"gravicollapse: {e}", file=sys.stderr)
        return e.exit_code

    try:
        report = run_scenario(scenario)
        out = Path(scenario.output_dir)
        emit_report(report, out)
    except GraviCollapseError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception:
        logger.exception(f"Scenario {scenario.scenario} failed")
        return EXIT_NUMERICAL

    if args.command == "units":
        print(json.dumps(jsonable(report.metrics), indent=2))
    else:
        print(report.summary)
    return EXIT_OK


def main():
    """Console entry point"""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        sys.exit(130)


if __name__ == "__main__":
    main()
