import abc
from typing import Optional, Tuple

import numpy as np

from .rng import RngStream
from .types import DatasetMeta


class Environment(metaclass=abc.ABCMeta):
    """Vectorised MDP simulator used for ground truth and offline data generation.

    Finite-horizon environments set `horizon`; discounted ones set `gamma`.
    Environments are immutable after construction.
    """

    env_id: str = "environment"
    obs_dim: int
    n_actions: int
    reward_dim: int
    horizon: Optional[int] = None
    gamma: Optional[float] = None

    @abc.abstractmethod
    def sample_initial(self, m: int, rng: RngStream) -> np.ndarray:
        """Draw m initial observations x ~ μ, shape (m, D)."""

    @abc.abstractmethod
    def step(
        self, x: np.ndarray, a: np.ndarray, h: int, rng: RngStream
    ) -> Tuple[np.ndarray, np.ndarray]:
        """One transition from (x, a) at step h; returns (r, x') with shapes (n, d) and (n, D)."""

    def meta(self) -> DatasetMeta:
        return DatasetMeta(
            env_id=self.env_id,
            reward_dim=self.reward_dim,
            obs_dim=self.obs_dim,
            n_actions=self.n_actions,
            horizon=self.horizon,
            gamma=self.gamma,
        )
