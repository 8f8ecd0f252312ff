from .config import (
    ALGORITHMS,
    METRICS,
    AlgorithmConfig,
    DataConfig,
    EnvironmentConfig,
    ExperimentConfig,
    MetricConfig,
)
from .evaluation import Measurement, RunRecord, default_histogram, evaluate_run, evaluate_runs, true_conditional
from .experiment import generate_data, make_dataset, model_spec, register_model_import, run_experiment, run_seed, train
from .report import OUT_OF_SCOPE, REPORT_COLUMNS, REFERENCE_VALUES, ResultRow, ResultsTable, apply_acceptance, criteria
from .reproduce import PROFILES, TABLES, Reproduction, reproduce, table_config

__all__ = [
    "ALGORITHMS",
    "METRICS",
    "OUT_OF_SCOPE",
    "PROFILES",
    "REFERENCE_VALUES",
    "REPORT_COLUMNS",
    "TABLES",
    "AlgorithmConfig",
    "DataConfig",
    "EnvironmentConfig",
    "ExperimentConfig",
    "Measurement",
    "MetricConfig",
    "Reproduction",
    "ResultRow",
    "ResultsTable",
    "RunRecord",
    "apply_acceptance",
    "criteria",
    "default_histogram",
    "evaluate_run",
    "evaluate_runs",
    "generate_data",
    "make_dataset",
    "model_spec",
    "register_model_import",
    "reproduce",
    "run_experiment",
    "run_seed",
    "table_config",
    "train",
    "true_conditional",
]
