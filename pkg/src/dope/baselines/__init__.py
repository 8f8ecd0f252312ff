from .categorical_td import CategoricalTdConfig, categorical_td_run, next_step_distribution, projected_targets
from .fqe import FqeConfig, FqeResult, fqe_finite, least_squares_q
from .quantile_td import QuantileTdConfig, QuantileTdModel, quantile_huber, quantile_midpoints, quantile_td_run

__all__ = [
    "CategoricalTdConfig",
    "FqeConfig",
    "FqeResult",
    "QuantileTdConfig",
    "QuantileTdModel",
    "categorical_td_run",
    "fqe_finite",
    "least_squares_q",
    "next_step_distribution",
    "projected_targets",
    "quantile_huber",
    "quantile_midpoints",
    "quantile_td_run",
]
