# Tabular MDPs with exact return-distribution oracles (mixtures over a dictionary of reward densities)

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..errors import InvalidArgumentError, ValidationError
from ..mdp_core.environment import Environment
from ..mdp_core.policy import PROB_TOL, Policy, TabularPolicy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import OfflineDataset

logger = logging.getLogger(__name__)

DENSITY_KINDS = ("gaussian", "uniform")


@dataclass(frozen=True)
class RewardDensity:
    """1-d reward density with an analytic log-pdf

    .. parameter:: Kind, 'gaussian' or 'uniform'
    .. parameter:: Location (gaussian mean) or lower bound (uniform)
    .. parameter:: Scale (gaussian std) or upper bound (uniform)
    """

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise ValidationError(f"Unknown reward density kind '{self.kind}'")
        if self.kind == "gaussian" and not self.b > 0:
            raise ValidationError(f"Gaussian scale must be > 0, got {self.b}")
        if self.kind == "uniform" and not self.b > self.a:
            raise ValidationError(f"Uniform density needs low < high, got [{self.a}, {self.b}]")

    @classmethod
    def gaussian(cls, loc: float, scale: float) -> "RewardDensity":
        return cls("gaussian", float(loc), float(scale))

    @classmethod
    def uniform(cls, low: float, high: float) -> "RewardDensity":
        return cls("uniform", float(low), float(high))

    @property
    def support(self) -> Tuple[float, float]:
        """Interval carrying all but a negligible part of the mass."""
        if self.kind == "gaussian":
            return self.a - 10.0 * self.b, self.a + 10.0 * self.b
        return self.a, self.b

    @property
    def mean(self) -> float:
        return self.a if self.kind == "gaussian" else 0.5 * (self.a + self.b)

    def log_pdf(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "gaussian":
            return stats.norm.logpdf(z, loc=self.a, scale=self.b)
        return stats.uniform.logpdf(z, loc=self.a, scale=self.b - self.a)

    def pdf(self, z: np.ndarray) -> np.ndarray:
        return np.exp(self.log_pdf(z))

    def cdf(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "gaussian":
            return stats.norm.cdf(z, loc=self.a, scale=self.b)
        return stats.uniform.cdf(z, loc=self.a, scale=self.b - self.a)

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(self.a, self.b, size=n)
        return rng.uniform(self.a, self.b, size=n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, content: dict) -> "RewardDensity":
        return cls(content["kind"], float(content["a"]), float(content["b"]))


def sample_dictionary(dictionary: Sequence[RewardDensity], index: np.ndarray, rng: RngStream) -> np.ndarray:
    """Draw z_i from dictionary[index_i] for each i."""
    index = np.asarray(index)
    out = np.empty(index.shape[0])
    for j in np.unique(index):
        rows = np.flatnonzero(index == j)
        out[rows] = dictionary[j].sample(rows.shape[0], rng.derive("density", int(j)))
    return out


def uniform_bins(low: float, high: float, n_bins: int) -> List[RewardDensity]:
    """Histogram dictionary: n_bins uniform densities tiling [low, high]."""
    if n_bins < 1 or not high > low:
        raise InvalidArgumentError("uniform_bins needs n_bins >= 1 and low < high")
    edges = np.linspace(low, high, n_bins + 1)
    return [RewardDensity.uniform(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """Exact Z^π_h(x, a) as weights over the terminal (x', a') reward densities.

    `weights[h-1, x, a]` is a probability vector over the `dictionary` index x'·A + a'.
    """

    weights: np.ndarray
    dictionary: Tuple[RewardDensity, ...]

    def __post_init__(self):
        w = self.weights
        if w.ndim != 4 or w.shape[-1] != len(self.dictionary):
            raise ValidationError("Mixture weights must have shape (H, S, A, J) with J dictionary entries")
        if (w < -PROB_TOL).any() or np.abs(w.sum(axis=-1) - 1.0).max() > PROB_TOL:
            raise ValidationError("Mixture weight rows must be probability vectors")

    @property
    def horizon(self) -> int:
        return self.weights.shape[0]

    def at(self, h: int, x: int, a: int) -> np.ndarray:
        return self.weights[h - 1, x, a]

    def marginal(self, h: int, state_action: np.ndarray) -> np.ndarray:
        """Weights of E_{(x,a)~q} Z^π_h(x, a) for a (S, A) distribution q."""
        return np.einsum("xa,xaj->j", state_action, self.weights[h - 1])

    def sample(self, w: np.ndarray, m: int, rng: RngStream) -> np.ndarray:
        index = rng.derive("component").choice(len(self.dictionary), size=m, p=w / w.sum())
        return sample_dictionary(self.dictionary, index, rng.derive("value"))


@dataclass(frozen=True, eq=False)
class TabularMDP(Environment):
    """Tabular MDP with one-hot observations

    Finite-horizon instances (`horizon` set) only pay a reward at step H; discounted
    instances (`gamma` set) pay r(x, a) at every step.

    .. parameter:: Transition tensor P, shape (S, A, S)
    .. parameter:: Reward densities, one per (x, a) in index x·A + a
    .. parameter:: Initial distribution μ, shape (S,)
    .. parameter:: Horizon H (finite horizon)
    .. parameter:: Discount γ (discounted)
    """

    P: np.ndarray
    rewards: Tuple[RewardDensity, ...]
    mu: np.ndarray
    horizon: Optional[int] = None
    gamma: Optional[float] = None
    name: str = "tabular"

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rewards", tuple(self.rewards))
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValidationError(f"P must have shape (S, A, S), got {P.shape}")
        if (P < 0).any() or np.abs(P.sum(axis=2) - 1.0).max() > PROB_TOL:
            raise ValidationError("Transition rows P(.|x, a) must be probability vectors")
        if mu.shape != (P.shape[0],) or (mu < 0).any() or abs(mu.sum() - 1.0) > PROB_TOL:
            raise ValidationError("Initial distribution must be a probability vector over states")
        if len(self.rewards) != P.shape[0] * P.shape[1]:
            raise ValidationError(f"Need one reward density per (x, a) pair, got {len(self.rewards)}")
        if (self.horizon is None) == (self.gamma is None):
            raise ValidationError("Exactly one of horizon and gamma must be set")
        if self.horizon is not None and self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if self.gamma is not None and not 0.0 <= self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def env_id(self) -> str:
        return self.name

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    @property
    def obs_dim(self) -> int:
        return self.n_states

    @property
    def reward_dim(self) -> int:
        return 1

    def to_dict(self) -> dict:
        return {
            "kind": "tabular",
            "name": self.name,
            "P": self.P.tolist(),
            "rewards": [r.to_dict() for r in self.rewards],
            "mu": self.mu.tolist(),
            "horizon": self.horizon,
            "gamma": self.gamma,
        }

    def one_hot(self, s: np.ndarray) -> np.ndarray:
        return np.eye(self.n_states)[np.asarray(s)]

    def state_of(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(np.atleast_2d(x), axis=1)

    def pays_reward(self, h: int) -> bool:
        return self.horizon is None or h == self.horizon

    def sample_initial(self, m: int, rng: RngStream) -> np.ndarray:
        return self.one_hot(rng.categorical(self.mu, size=m))

    def sample_reward(self, s: np.ndarray, a: np.ndarray, rng: RngStream) -> np.ndarray:
        return sample_dictionary(self.rewards, np.asarray(s) * self.n_actions + np.asarray(a), rng)

    def step(self, x: np.ndarray, a: np.ndarray, h: int, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
        s = self.state_of(x)
        a = np.asarray(a)
        s_next = rng.derive("transition").categorical(self.P[s, a])
        if self.pays_reward(h):
            r = self.sample_reward(s, a, rng.derive("reward"))
        else:
            r = np.zeros(s.shape[0])
        return r[:, None], self.one_hot(s_next)

    def policy_table(self, policy: Policy) -> np.ndarray:
        """π as an (S, A) table, evaluated on the one-hot observations."""
        table = policy.probs(np.eye(self.n_states))
        if table.shape != (self.n_states, self.n_actions):
            raise ValidationError("Policy must be defined on every state of the MDP")
        return table


def tabular_exact_return_dist(mdp: TabularMDP, policy: Policy) -> MixtureWeights:
    """Backward DP for the terminal (x', a') mixture weights of a sparse-reward MDP."""
    if mdp.horizon is None:
        raise InvalidArgumentError("The exact mixture oracle needs a finite-horizon MDP")
    S, A, H = mdp.n_states, mdp.n_actions, mdp.horizon
    pi = mdp.policy_table(policy)
    weights = np.zeros((H, S, A, S * A))
    weights[H - 1] = np.eye(S * A).reshape(S, A, S * A)
    for h in range(H - 1, 0, -1):
        # w(h, x, a) = Σ_{x', a'} P(x'|x, a) π(a'|x') w(h+1, x', a')
        next_state = np.einsum("ya,yaj->yj", pi, weights[h])
        weights[h - 1] = np.einsum("xay,yj->xaj", mdp.P, next_state)
    return MixtureWeights(weights, mdp.rewards)


def state_action_distributions(mdp: TabularMDP, policy: Policy, steps: Optional[int] = None) -> np.ndarray:
    """Forward DP for d^π_h(x, a), h = 1..steps (H by default), shape (steps, S, A)."""
    steps = steps or mdp.horizon
    if steps is None:
        raise InvalidArgumentError("steps is required for discounted MDPs")
    pi = mdp.policy_table(policy)
    d = np.zeros((steps, mdp.n_states, mdp.n_actions))
    d[0] = mdp.mu[:, None] * pi
    for h in range(1, steps):
        d[h] = np.einsum("xa,xay->y", d[h - 1], mdp.P)[:, None] * pi
    return d


def discounted_occupancy(mdp: TabularMDP, policy: Policy, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """d^π(x, a) = (1-γ) Σ_t γ^t d_t(x, a) by fixed-point iteration, shape (S, A)."""
    if mdp.gamma is None:
        raise InvalidArgumentError("Discounted occupancy needs a discounted MDP")
    pi = mdp.policy_table(policy)
    start = (1.0 - mdp.gamma) * mdp.mu[:, None] * pi
    d = start.copy()
    for i in range(max_iter):
        d_new = start + mdp.gamma * np.einsum("xa,xay->y", d, mdp.P)[:, None] * pi
        if np.abs(d_new - d).max() < tol:
            logger.debug("Occupancy converged after %d iterations", i + 1)
            return d_new
        d = d_new
    logger.warning("Occupancy iteration did not reach tol=%g in %d iterations", tol, max_iter)
    return d


def generate_tabular_dataset(mdp: TabularMDP, rho: np.ndarray, n: int, rng: RngStream) -> OfflineDataset:
    """n offline tuples with (x, a) ~ ρ.

    Finite horizon: ρ is (S, A) for every step or (H, S, A) per step; tuples are split
    evenly over the steps and labelled. Discounted: ρ is (S, A) and no steps are recorded.
    """
    S, A = mdp.n_states, mdp.n_actions
    rho = np.asarray(rho, dtype=float)
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")

    if mdp.horizon is None:
        per_step = [(None, n, rho)]
    else:
        if rho.ndim == 2:
            rho = np.broadcast_to(rho, (mdp.horizon, S, A))
        counts = np.full(mdp.horizon, n // mdp.horizon)
        counts[: n % mdp.horizon] += 1
        per_step = [(h, int(counts[h - 1]), rho[h - 1]) for h in range(1, mdp.horizon + 1)]

    xs, acts, rs, xps, steps = [], [], [], [], []
    for h, count, q in per_step:
        if q.shape != (S, A) or (q < 0).any() or abs(q.sum() - 1.0) > PROB_TOL:
            raise ValidationError("ρ must be a probability table over (x, a)")
        if count == 0:
            continue
        cell = rng.derive("step", 0 if h is None else h)
        pair = cell.derive("pair").choice(S * A, size=count, p=q.ravel())
        s, a = np.divmod(pair, A)
        x = mdp.one_hot(s)
        r, x_next = mdp.step(x, a, 1 if h is None else h, cell.derive("step"))
        xs.append(x)
        acts.append(a)
        rs.append(r)
        xps.append(x_next)
        steps.append(np.full(count, 0 if h is None else h))

    return OfflineDataset.from_arrays(
        x=np.concatenate(xs),
        a=np.concatenate(acts),
        r=np.concatenate(rs),
        x_next=np.concatenate(xps),
        meta=mdp.meta(),
        step=None if mdp.horizon is None else np.concatenate(steps),
    )


# Fixed instances used by the oracle and property checks


def four_state_test_mdp(horizon: int = 3) -> Tuple[TabularMDP, TabularPolicy]:
    """4 states, 2 actions, well-separated terminal densities on [0, 1]."""
    P = np.array(
        [
            [[0.1, 0.6, 0.2, 0.1], [0.5, 0.1, 0.1, 0.3]],
            [[0.2, 0.2, 0.5, 0.1], [0.0, 0.3, 0.3, 0.4]],
            [[0.3, 0.3, 0.2, 0.2], [0.6, 0.0, 0.2, 0.2]],
            [[0.25, 0.25, 0.25, 0.25], [0.1, 0.1, 0.1, 0.7]],
        ]
    )
    rewards = [RewardDensity.gaussian(0.06 + 0.12 * j, 0.02) for j in range(7)]
    rewards.append(RewardDensity.uniform(0.9, 1.0))
    mdp = TabularMDP(P=P, rewards=tuple(rewards), mu=np.array([0.4, 0.3, 0.2, 0.1]), horizon=horizon, name="tabular-4x2")
    policy = TabularPolicy(np.array([[0.7, 0.3], [0.2, 0.8], [0.5, 0.5], [0.9, 0.1]]))
    return mdp, policy


def three_state_discounted_mdp(gamma: float = 0.9) -> Tuple[TabularMDP, TabularPolicy]:
    P = np.array(
        [
            [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1]],
            [[0.3, 0.3, 0.4], [0.0, 0.5, 0.5]],
            [[0.5, 0.0, 0.5], [0.2, 0.2, 0.6]],
        ]
    )
    rewards = tuple(RewardDensity.gaussian(0.1 + 0.15 * j, 0.05) for j in range(6))
    mdp = TabularMDP(P=P, rewards=rewards, mu=np.array([1.0, 0.0, 0.0]), gamma=gamma, name="tabular-3x2-discounted")
    policy = TabularPolicy(np.array([[0.6, 0.4], [0.5, 0.5], [0.2, 0.8]]))
    return mdp, policy


def two_state_discounted_mdp(gamma: float = 0.9) -> Tuple[TabularMDP, TabularPolicy]:
    P = np.array(
        [
            [[0.8, 0.2], [0.3, 0.7]],
            [[0.4, 0.6], [0.9, 0.1]],
        ]
    )
    rewards = (
        RewardDensity.uniform(0.0, 0.5),
        RewardDensity.uniform(0.5, 1.0),
        RewardDensity.uniform(0.25, 0.75),
        RewardDensity.uniform(0.0, 1.0),
    )
    mdp = TabularMDP(P=P, rewards=rewards, mu=np.array([0.5, 0.5]), gamma=gamma, name="tabular-2x2-discounted")
    policy = TabularPolicy(np.array([[0.5, 0.5], [0.3, 0.7]]))
    return mdp, policy
