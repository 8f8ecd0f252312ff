# Rich-observation combination lock: two latent chains, observations ψ(w, h) = one-hot(w) ⊕ one-hot(h) ⊕ noise

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, InvalidArgumentError
from ..mdp_core.environment import Environment
from ..mdp_core.policy import EpsilonGreedyPolicy, Policy, UniformPolicy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution, OfflineDataset

logger = logging.getLogger(__name__)

GOOD, BAD = 0, 1
REWARD_MODES = ("scalar-gaussian", "ring-2d")

IntOrArray = Union[int, np.ndarray]


def comb_lock_transition(w: IntOrArray, h: int, a: IntOrArray, optimal_action: int = 0) -> np.ndarray:
    """Next latent: stays good only on the optimal action; the bad chain is absorbing."""
    w = np.asarray(w)
    a = np.asarray(a)
    return np.where((w == GOOD) & (a == optimal_action), GOOD, BAD)


@dataclass(frozen=True)
class CombinationLock(Environment):
    """Combination lock

    .. parameter:: Horizon H
    .. parameter:: Number of actions A
    .. parameter:: Observation dimension (latent block 2, step block H, noise block rest)
    .. parameter:: Reward mode, 'scalar-gaussian' or 'ring-2d'
    .. parameter:: Observation noise standard deviation
    .. parameter:: Optimal action per step a*_h (defaults to 0 for all h)
    """

    horizon: int = 20
    n_actions: int = 2
    obs_dim: int = 30
    reward_mode: str = "scalar-gaussian"
    noise_std: float = 0.1
    optimal_actions: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if self.horizon > self.obs_dim - 2:
            raise ConfigurationError(
                f"horizon {self.horizon} does not fit a {self.obs_dim}-dim observation (needs H <= {self.obs_dim - 2})"
            )
        if self.reward_mode not in REWARD_MODES:
            raise ConfigurationError(f"reward_mode must be one of {REWARD_MODES}, got '{self.reward_mode}'")
        if self.optimal_actions is None:
            object.__setattr__(self, "optimal_actions", (0,) * self.horizon)
        if len(self.optimal_actions) != self.horizon:
            raise ConfigurationError("optimal_actions needs one entry per step")
        if any(not 0 <= a < self.n_actions for a in self.optimal_actions):
            raise ConfigurationError(f"optimal actions must lie in [0, {self.n_actions})")

    @property
    def env_id(self) -> str:
        return "combination-lock-1d" if self.reward_mode == "scalar-gaussian" else "combination-lock-2d"

    @property
    def reward_dim(self) -> int:
        return 1 if self.reward_mode == "scalar-gaussian" else 2

    @property
    def noise_dim(self) -> int:
        return self.obs_dim - 2 - self.horizon

    def optimal_action(self, h: int) -> int:
        return self.optimal_actions[h - 1]

    def to_dict(self) -> dict:
        return {
            "kind": "combination_lock",
            "horizon": self.horizon,
            "n_actions": self.n_actions,
            "obs_dim": self.obs_dim,
            "reward_mode": self.reward_mode,
            "noise_std": self.noise_std,
            "optimal_actions": list(self.optimal_actions),
        }

    def test_policy(self, epsilon: float = 1.0 / 7.0) -> Policy:
        """ε-greedy around a*_h = 0; only valid when all optimal actions coincide."""
        if len(set(self.optimal_actions)) != 1:
            raise ConfigurationError("The ε-greedy test policy needs a single optimal action")
        return EpsilonGreedyPolicy(self.n_actions, self.optimal_actions[0], epsilon)

    # Observations

    def observe(self, w: IntOrArray, h: IntOrArray, rng: RngStream, noise: bool = True) -> np.ndarray:
        """ψ(w, h) for each (w, h) pair, shape (n, obs_dim)."""
        w, h = np.broadcast_arrays(np.atleast_1d(w), np.atleast_1d(h))
        if (h < 1).any() or (h > self.horizon).any():
            raise InvalidArgumentError(f"step must lie in [1, {self.horizon}]")
        n = w.shape[0]
        x = np.zeros((n, self.obs_dim))
        rows = np.arange(n)
        x[rows, w] = 1.0
        x[rows, 2 + h - 1] = 1.0
        if noise and self.noise_dim > 0:
            x[:, 2 + self.horizon :] = rng.normal(0.0, self.noise_std, size=(n, self.noise_dim))
        return x

    def latent_of(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(np.atleast_2d(x)[:, :2], axis=1)

    def step_of(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(np.atleast_2d(x)[:, 2 : 2 + self.horizon], axis=1) + 1

    # Rewards

    def reward(self, w: IntOrArray, rng: RngStream) -> np.ndarray:
        """Terminal reward r(w_H), shape (n, d)."""
        w = np.atleast_1d(w)
        n = w.shape[0]
        good = w == GOOD
        if self.reward_mode == "scalar-gaussian":
            return rng.normal(np.where(good, 1.0, -1.0), 0.1)[:, None]

        scale = np.sqrt(0.05)
        r = rng.normal(0.0, scale, size=(n, 2))
        norms = np.linalg.norm(r, axis=1)
        # Resample the measure-zero event |x| ~ 0 before dividing
        tiny = good & (norms < 1e-12)
        while tiny.any():
            r[tiny] = rng.normal(0.0, scale, size=(int(tiny.sum()), 2))
            norms = np.linalg.norm(r, axis=1)
            tiny = good & (norms < 1e-12)
        ring = r + 2.0 * r / np.where(norms > 0, norms, 1.0)[:, None]
        return np.where(good[:, None], ring, r)

    # Environment interface

    def sample_initial(self, m: int, rng: RngStream) -> np.ndarray:
        return self.observe(np.full(m, GOOD), 1, rng)

    def step(self, x: np.ndarray, a: np.ndarray, h: int, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
        w = self.latent_of(x)
        n = w.shape[0]
        if h < self.horizon:
            w_next = comb_lock_transition(w, h, a, self.optimal_action(h))
            return np.zeros((n, self.reward_dim)), self.observe(w_next, h + 1, rng.derive("observe"))
        # Step H: the action is a no-op, the next observation is a terminal placeholder
        r = self.reward(w, rng.derive("reward"))
        return r, self.observe(w, self.horizon, rng.derive("observe"))

    # Ground truth

    def good_chain_probability(self, h: int, policy: EpsilonGreedyPolicy) -> float:
        """P(w_H = good | w_h = good, a_h = a*_h) by exact DP over the two-state latent chain."""
        if not 1 <= h <= self.horizon:
            raise InvalidArgumentError(f"step must lie in [1, {self.horizon}]")
        stay = np.zeros(2)
        stay[GOOD] = 1.0
        # a*_h is forced; π acts at steps h+1 .. H-1; the step-H action does not matter
        for _ in range(h + 1, self.horizon):
            stay = np.array([stay[GOOD] * policy.greedy_probability, stay[BAD] + stay[GOOD] * (1 - policy.greedy_probability)])
        return float(stay[GOOD])

    def conditional_returns(
        self,
        h: int,
        policy: Policy,
        m: int,
        rng: RngStream,
        latent: int = GOOD,
        action: Optional[int] = None,
    ) -> EmpiricalDistribution:
        """Samples of Z^π_h(ψ(latent, h), a) with a = a*_h unless given, by rolling out π."""
        if m < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {m}")
        a = self.optimal_action(h) if action is None else action
        x = self.observe(np.full(m, latent), h, rng.derive("observe", h))
        z = np.zeros((m, self.reward_dim))
        actions = np.full(m, a)
        for t in range(h, self.horizon + 1):
            if t > h:
                actions = policy.sample(x, rng.derive("action", t))
            r, x = self.step(x, actions, t, rng.derive("step", t))
            z += r
        return EmpiricalDistribution(z)


def generate_offline_dataset(env: CombinationLock, per_cell: int, rng: RngStream) -> OfflineDataset:
    """Uniform offline data: per_cell fresh observations per (h, w) cell, uniform actions, one step each."""
    if per_cell < 1:
        raise InvalidArgumentError(f"per_cell must be >= 1, got {per_cell}")
    behaviour = UniformPolicy(env.n_actions)
    xs, acts, rs, xps, steps = [], [], [], [], []
    for h in range(1, env.horizon + 1):
        for w in (GOOD, BAD):
            cell = rng.derive("cell", h, w)
            x = env.observe(np.full(per_cell, w), h, cell.derive("observe"))
            a = behaviour.sample(x, cell.derive("action"))
            r, x_next = env.step(x, a, h, cell.derive("step"))
            xs.append(x)
            acts.append(a)
            rs.append(r)
            xps.append(x_next)
            steps.append(np.full(per_cell, h))
    dataset = OfflineDataset.from_arrays(
        x=np.concatenate(xs),
        a=np.concatenate(acts),
        r=np.concatenate(rs),
        x_next=np.concatenate(xps),
        meta=env.meta(),
        step=np.concatenate(steps),
    )
    logger.info("Generated %d combination-lock tuples (%d per cell)", len(dataset), per_cell)
    return dataset
