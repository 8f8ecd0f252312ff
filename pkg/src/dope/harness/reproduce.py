# End-to-end table reproduction from the bundled configurations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Union

from ..errors import InvalidArgumentError
from ..load import get_config
from ..theory_checks.suite import TheorySuiteConfig, run_theory_suite, write_theory_report
from .config import ExperimentConfig
from .evaluation import evaluate_runs
from .experiment import run_experiment
from .report import TABLE_METRIC, ResultsTable, apply_acceptance

logger = logging.getLogger(__name__)

TABLES = ("table1", "table2", "table_w1", "theory")
PROFILES = ("desk", "paper")


@dataclass
class Reproduction:
    """Outcome of one reproduction: the report written and what went wrong, if anything."""

    table_id: str
    report: Path
    failed_checks: List[str]
    errors: List[BaseException]

    @property
    def passed(self) -> bool:
        return not self.failed_checks and not self.errors


def table_config(table_id: str, profile: str, out_dir: Union[str, Path]) -> ExperimentConfig:
    if table_id not in TABLES or table_id == "theory":
        raise InvalidArgumentError(f"No experiment configuration for table '{table_id}'")
    if profile not in PROFILES:
        raise InvalidArgumentError(f"profile must be one of {PROFILES}, got '{profile}'")
    config = ExperimentConfig.from_dict(get_config(table_id, profile))
    return replace(config, output_dir=str(Path(out_dir) / "runs"))


def reproduce_table(
    table_id: str,
    profile: str = "desk",
    out_dir: Union[str, Path] = ".",
    workers: Optional[int] = None,
) -> Reproduction:
    """Train, evaluate and compare against the reference values; a partial report is written on failures."""
    config = table_config(table_id, profile, out_dir)
    results = run_experiment(config, workers=workers, raise_errors=False)
    errors = [r for r in results if isinstance(r, BaseException)]
    runs = [r for r in results if not isinstance(r, BaseException)]

    measurements = []
    if runs:
        histogram = config.metric.histogram(config.environment.build().reward_dim)
        metrics = (TABLE_METRIC[table_id],)
        measurements = evaluate_runs(runs, config.metric.steps, metrics, config.metric.samples, histogram)
    table = apply_acceptance(ResultsTable.from_measurements(measurements), table_id)
    report = table.to_csv(Path(out_dir) / f"{table_id}_report.csv")
    failed = [f"h={r.h} {r.algorithm} {r.metric} {r.tolerance}" for r in table.failed]
    return Reproduction(table_id, report, failed, errors)


def reproduce_theory(
    profile: str = "desk",
    out_dir: Union[str, Path] = ".",
    workers: Optional[int] = None,
) -> Reproduction:
    if profile not in PROFILES:
        raise InvalidArgumentError(f"profile must be one of {PROFILES}, got '{profile}'")
    rows = run_theory_suite(TheorySuiteConfig(), workers=workers)
    report = write_theory_report(rows, out_dir)
    return Reproduction("theory", report, [row.name for row in rows if not row.passed], [])


def reproduce(
    table_id: str,
    profile: str = "desk",
    out_dir: Union[str, Path] = ".",
    workers: Optional[int] = None,
) -> Reproduction:
    if table_id == "theory":
        return reproduce_theory(profile, out_dir, workers)
    return reproduce_table(table_id, profile, out_dir, workers)
