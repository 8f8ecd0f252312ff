import abc
import functools
from typing import Callable, Optional

import numpy as np

from ..errors import InvalidArgumentError, ValidationError
from .rng import RngStream

PROB_TOL = 1e-9


def _decode_one_hot(n_states: int, x: np.ndarray) -> np.ndarray:
    return np.argmax(np.atleast_2d(x)[:, :n_states], axis=1)


def one_hot_state(n_states: int) -> Callable[[np.ndarray], np.ndarray]:
    """State index decoder for observations whose first `n_states` entries are a one-hot block."""
    return functools.partial(_decode_one_hot, n_states)


class Policy(metaclass=abc.ABCMeta):
    """Map from observations to action distributions."""

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise InvalidArgumentError(f"n_actions must be >= 1, got {n_actions}")
        self.n_actions = n_actions

    @abc.abstractmethod
    def probs(self, x: np.ndarray) -> np.ndarray:
        """Action probabilities, shape (n, A), for observations of shape (n, D)."""

    def sample(self, x: np.ndarray, rng: RngStream) -> np.ndarray:
        return rng.categorical(self.probs(np.atleast_2d(x)))

    def to_dict(self) -> dict:
        raise NotImplementedError


class FixedActionPolicy(Policy):
    """Deterministic policy that always plays `action`."""

    def __init__(self, n_actions: int, action: int):
        super().__init__(n_actions)
        if not 0 <= action < n_actions:
            raise InvalidArgumentError(f"action must lie in [0, {n_actions}), got {action}")
        self.action = action

    def probs(self, x: np.ndarray) -> np.ndarray:
        p = np.zeros((np.atleast_2d(x).shape[0], self.n_actions))
        p[:, self.action] = 1.0
        return p

    def to_dict(self) -> dict:
        return {"kind": "fixed", "n_actions": self.n_actions, "action": self.action}


class EpsilonGreedyPolicy(Policy):
    """Plays `greedy_action` with probability 1-ε and a uniform action over all A otherwise.

    The greedy action is therefore taken with probability 1 - ε + ε/A.
    """

    def __init__(self, n_actions: int, greedy_action: int = 0, epsilon: float = 1.0 / 7.0):
        super().__init__(n_actions)
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidArgumentError(f"epsilon must lie in [0, 1], got {epsilon}")
        if not 0 <= greedy_action < n_actions:
            raise InvalidArgumentError(f"greedy_action must lie in [0, {n_actions}), got {greedy_action}")
        self.greedy_action = greedy_action
        self.epsilon = epsilon

    @property
    def greedy_probability(self) -> float:
        return 1.0 - self.epsilon + self.epsilon / self.n_actions

    def probs(self, x: np.ndarray) -> np.ndarray:
        p = np.full((np.atleast_2d(x).shape[0], self.n_actions), self.epsilon / self.n_actions)
        p[:, self.greedy_action] += 1.0 - self.epsilon
        return p

    def to_dict(self) -> dict:
        return {
            "kind": "epsilon_greedy",
            "n_actions": self.n_actions,
            "greedy_action": self.greedy_action,
            "epsilon": self.epsilon,
        }


class UniformPolicy(EpsilonGreedyPolicy):
    """Uniform over all actions; the behaviour policy of the offline generators."""

    def __init__(self, n_actions: int):
        super().__init__(n_actions, greedy_action=0, epsilon=1.0)

    def to_dict(self) -> dict:
        return {"kind": "uniform", "n_actions": self.n_actions}


class TabularPolicy(Policy):
    """Policy given by a (|X|, A) table; observations are decoded to a state index."""

    def __init__(
        self,
        table: np.ndarray,
        state_of: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2:
            raise ValidationError("Policy table must have shape (n_states, n_actions)")
        if (table < 0).any() or np.abs(table.sum(axis=1) - 1.0).max() > PROB_TOL:
            raise ValidationError("Policy table rows must be probability vectors")
        super().__init__(table.shape[1])
        self.table = table
        self.state_of = state_of or one_hot_state(table.shape[0])

    @property
    def n_states(self) -> int:
        return self.table.shape[0]

    def probs(self, x: np.ndarray) -> np.ndarray:
        return self.table[self.state_of(x)]

    def to_dict(self) -> dict:
        return {"kind": "tabular", "table": self.table.tolist()}


def policy_from_dict(content: dict) -> Policy:
    kind = content.get("kind")
    if kind == "fixed":
        return FixedActionPolicy(content["n_actions"], content["action"])
    if kind == "epsilon_greedy":
        return EpsilonGreedyPolicy(content["n_actions"], content["greedy_action"], content["epsilon"])
    if kind == "uniform":
        return UniformPolicy(content["n_actions"])
    if kind == "tabular":
        return TabularPolicy(np.array(content["table"]))
    raise InvalidArgumentError(f"Unknown policy kind '{kind}'")
