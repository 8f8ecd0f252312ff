"""
Command line front end for distributional off-policy evaluation experiments.

Usage:
  dope gen-data --config C.toml
  dope run --config C.toml --seed 1
  dope eval --runs runs/fle-gmm/seed-1 runs/fle-gmm/seed-2 --metric tv --steps 1,10,19
  dope reproduce --table table1 --profile desk --out out/
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from ..errors import DopeError, InvalidArgumentError
from ..metrics.distances import HistogramSpec
from .config import METRICS, ExperimentConfig
from .evaluation import DEFAULT_SAMPLES, RunRecord, evaluate_runs
from .experiment import generate_data, run_experiment
from .report import REPORT_COLUMNS, ResultsTable
from .reproduce import PROFILES, TABLES, reproduce

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "DOPE_LOG_LEVEL"

EXIT_OK, EXIT_ERROR, EXIT_FAILED_CHECKS = 0, 1, 2


def _steps(value: str) -> List[int]:
    try:
        return [int(s) for s in value.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be a comma separated list of integers, got '{value}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dope",
        description="Fitted Likelihood Estimation for distributional off-policy evaluation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  dope gen-data --config table1.toml --seed 1
  dope run --config table1.toml --seed 1 --algorithm fle-gmm
  dope eval --runs runs/fle-gmm/seed-1 --metric w1 --steps 1,10,19 --out report.csv
  dope reproduce --table theory --out out/
        """,
    )
    parser.add_argument(
        "--log-level",
        default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
        help=f"Logging level (default: ${LOG_LEVEL_ENV} or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Generate the offline dataset of an experiment as CSV")
    gen.add_argument("--config", required=True, help="Experiment config (TOML, JSON or YAML)")
    gen.add_argument("--seed", type=int, default=None, help="Run seed (default: first seed of the config)")
    gen.add_argument("--out", default=None, help="Dataset CSV path (default: <output_dir>/data/...)")

    run = sub.add_parser("run", help="Train the configured algorithms")
    run.add_argument("--config", required=True, help="Experiment config (TOML, JSON or YAML)")
    run.add_argument("--seed", type=int, nargs="+", default=None, help="Run seeds (default: all seeds of the config)")
    run.add_argument("--algorithm", nargs="+", default=None, help="Algorithms to train (default: all)")
    run.add_argument("--workers", type=int, default=None, help="Worker processes (default: $DOPE_THREADS or CPU count)")

    ev = sub.add_parser("eval", help="Compare trained runs against the ground truth")
    ev.add_argument("--runs", nargs="+", required=True, help="Run directories")
    ev.add_argument("--metric", nargs="+", choices=METRICS, default=["tv"], help="Metrics (default: tv)")
    ev.add_argument("--steps", type=_steps, required=True, help="Comma separated steps, e.g. 1,10,19")
    ev.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Samples per side")
    ev.add_argument("--bins", type=int, default=None, help="Histogram bins per dimension")
    ev.add_argument("--low", type=float, default=None, help="Lower end of the histogram range")
    ev.add_argument("--high", type=float, default=None, help="Upper end of the histogram range")
    ev.add_argument("--out", default=None, help="Report CSV path (default: print to stdout)")

    rep = sub.add_parser("reproduce", help="Run a bundled table end to end and check it")
    rep.add_argument("--table", required=True, choices=TABLES)
    rep.add_argument("--profile", choices=PROFILES, default="desk")
    rep.add_argument("--out", default=".", help="Output directory")
    rep.add_argument("--workers", type=int, default=None, help="Worker processes (default: $DOPE_THREADS or CPU count)")
    return parser


def cmd_gen_data(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    seed = config.seeds[0] if args.seed is None else args.seed
    path = generate_data(config, seed, args.out)
    print(path)
    return EXIT_OK


def cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    for run_dir in run_experiment(config, seeds=args.seed, algorithms=args.algorithm, workers=args.workers):
        print(run_dir)
    return EXIT_OK


def cmd_eval(args) -> int:
    measurements = evaluate_runs(args.runs, args.steps, args.metric, args.samples, _histogram(args))
    table = ResultsTable.from_measurements(measurements)
    if args.out:
        table.to_csv(args.out)
    else:
        print(",".join(REPORT_COLUMNS))
        for row in table.rows:
            print(",".join(row.to_row()))
    return EXIT_OK


def _histogram(args) -> Optional[HistogramSpec]:
    """Histogram from --bins/--low/--high, sized to the reward dimension of the runs."""
    given = [v is not None for v in (args.bins, args.low, args.high)]
    if not any(given):
        return None
    if not all(given):
        raise InvalidArgumentError("--bins, --low and --high must be given together")
    dims = {RunRecord.read(d).env.reward_dim for d in args.runs}
    if len(dims) != 1:
        raise InvalidArgumentError(f"Runs mix reward dimensions {sorted(dims)}; evaluate them separately")
    return HistogramSpec.uniform(dims.pop(), args.bins, args.low, args.high)


def cmd_reproduce(args) -> int:
    outcome = reproduce(args.table, args.profile, Path(args.out), args.workers)
    print(outcome.report)
    for error in outcome.errors:
        logger.error("Run failed: %s", error)
    for name in outcome.failed_checks:
        logger.error("Check failed: %s", name)
    if outcome.errors:
        return EXIT_ERROR
    return EXIT_OK if outcome.passed else EXIT_FAILED_CHECKS


COMMANDS = {
    "gen-data": cmd_gen_data,
    "run": cmd_run,
    "eval": cmd_eval,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = str(args.log_level).upper()
    if not isinstance(logging.getLevelName(level), int):
        parser.error(f"unknown log level '{args.log_level}'")
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (DopeError, OSError) as ex:
        logger.error("%s", ex)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
