from .combination_lock import (
    BAD,
    GOOD,
    CombinationLock,
    comb_lock_transition,
    generate_offline_dataset,
)
from .lqr import LqrSystem, dlqr_gain, lqr_return_params, lqr_rollout_returns
from .tabular import (
    MixtureWeights,
    RewardDensity,
    TabularMDP,
    discounted_occupancy,
    four_state_test_mdp,
    generate_tabular_dataset,
    sample_dictionary,
    state_action_distributions,
    tabular_exact_return_dist,
    three_state_discounted_mdp,
    two_state_discounted_mdp,
    uniform_bins,
)

__all__ = [
    "BAD",
    "GOOD",
    "CombinationLock",
    "LqrSystem",
    "MixtureWeights",
    "RewardDensity",
    "TabularMDP",
    "comb_lock_transition",
    "discounted_occupancy",
    "dlqr_gain",
    "four_state_test_mdp",
    "generate_offline_dataset",
    "generate_tabular_dataset",
    "lqr_return_params",
    "lqr_rollout_returns",
    "sample_dictionary",
    "state_action_distributions",
    "tabular_exact_return_dist",
    "three_state_discounted_mdp",
    "two_state_discounted_mdp",
    "uniform_bins",
]
