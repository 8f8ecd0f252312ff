from .coverage import CoverageEstimate, coverage_constant_tabular
from .suite import (
    REPORT_COLUMNS,
    TheorySuiteConfig,
    bellman_fixed_point_check,
    contraction_suite,
    cvar_lipschitz_suite,
    discounted_checks,
    dominance_suite,
    fqe_reduction_check,
    run_theory_suite,
    write_theory_report,
)
from .sweep import ErrorRateTable, error_rate_sweep, estimator_tv, fle_error, tabular_mixture_spec

__all__ = [
    "CoverageEstimate",
    "ErrorRateTable",
    "REPORT_COLUMNS",
    "TheorySuiteConfig",
    "bellman_fixed_point_check",
    "contraction_suite",
    "coverage_constant_tabular",
    "cvar_lipschitz_suite",
    "discounted_checks",
    "dominance_suite",
    "error_rate_sweep",
    "estimator_tv",
    "fle_error",
    "fqe_reduction_check",
    "run_theory_suite",
    "tabular_mixture_spec",
    "write_theory_report",
]
