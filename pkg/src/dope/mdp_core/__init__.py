from .dataset import SPLIT_MODES, read_dataset_csv, split_by_step, split_dataset, step_subsets, write_dataset_csv
from .environment import Environment
from .policy import (
    EpsilonGreedyPolicy,
    FixedActionPolicy,
    Policy,
    TabularPolicy,
    UniformPolicy,
    one_hot_state,
    policy_from_dict,
)
from .rng import RngStream
from .rollout import monte_carlo_returns, truncation_length
from .types import DatasetMeta, EmpiricalDistribution, OfflineDataset, TransitionTuple

__all__ = [
    "SPLIT_MODES",
    "DatasetMeta",
    "EmpiricalDistribution",
    "Environment",
    "EpsilonGreedyPolicy",
    "FixedActionPolicy",
    "OfflineDataset",
    "Policy",
    "RngStream",
    "TabularPolicy",
    "TransitionTuple",
    "UniformPolicy",
    "monte_carlo_returns",
    "one_hot_state",
    "policy_from_dict",
    "read_dataset_csv",
    "split_by_step",
    "split_dataset",
    "step_subsets",
    "truncation_length",
    "write_dataset_csv",
]
