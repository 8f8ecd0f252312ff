from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..density_models.features import FeatureMap
from ..errors import InvalidArgumentError
from ..mdp_core.dataset import SPLIT_MODES, step_subsets
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import OfflineDataset


@dataclass(frozen=True, eq=False)
class FqeConfig:
    horizon: int
    feature_map: FeatureMap
    n_actions: int
    policy: Policy
    split: str = "stratified"
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {self.horizon}")
        if self.split not in SPLIT_MODES:
            raise InvalidArgumentError(f"split must be one of {SPLIT_MODES}, got '{self.split}'")


@dataclass(eq=False)
class FqeResult:
    """Fitted Q-values per step, `q[h]` of shape (n_keys, d)."""

    q: Dict[int, np.ndarray]
    feature_map: FeatureMap
    n_actions: int

    def value(self, h: int, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.q[h][self.feature_map.keys(x, a, self.n_actions)]

    def policy_value(self, h: int, x: np.ndarray, policy: Policy) -> np.ndarray:
        """Σ_a π(a|x) Q_h(x, a) per row."""
        x = np.atleast_2d(x)
        pi = policy.probs(x)
        return sum(pi[:, a, None] * self.value(h, x, np.full(x.shape[0], a)) for a in range(self.n_actions))


def least_squares_q(keys: np.ndarray, targets: np.ndarray, n_keys: int) -> np.ndarray:
    """Least-squares fit over one-hot key features; keys without data get the minimum-norm value 0."""
    design = np.zeros((keys.shape[0], n_keys))
    design[np.arange(keys.shape[0]), keys] = 1.0
    q, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return q


def fqe_finite(dataset: OfflineDataset, config: FqeConfig, rng: Optional[RngStream] = None) -> FqeResult:
    """Fitted Q Evaluation: Q_h regresses r + Σ_a' π(a'|x') Q_{h+1}(x', a') on the step-h subset."""
    H = config.horizon
    subsets = step_subsets(dataset, H, config.split, rng or RngStream(config.seed))
    n_keys = config.feature_map.n_cells * config.n_actions
    result = FqeResult({}, config.feature_map, config.n_actions)
    for h in range(H, 0, -1):
        subset = subsets[h - 1]
        targets = subset.r.copy()
        if h < H:
            targets = targets + result.policy_value(h + 1, subset.x_next, config.policy)
        keys = config.feature_map.keys(subset.x, subset.a, config.n_actions)
        result.q[h] = least_squares_q(keys, targets, n_keys)
    return result
