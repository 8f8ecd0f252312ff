from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..density_models.base import ConditionalDensityModel
from ..errors import InvalidArgumentError
from ..mdp_core.environment import Environment
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution


@dataclass(frozen=True, eq=False)
class BellmanApplication:
    """Distributional Bellman operator T^π for a fixed environment and policy

    .. parameter:: One-step environment sampler
    .. parameter:: Target policy π
    .. parameter:: Discount γ, or None for the undiscounted finite-horizon shift
    """

    env: Environment
    policy: Policy
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.gamma is not None and not 0.0 <= self.gamma < 1.0:
            raise InvalidArgumentError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def discount(self) -> float:
        return 1.0 if self.gamma is None else self.gamma

    def __call__(
        self,
        f: ConditionalDensityModel,
        x: np.ndarray,
        a: int,
        m: int,
        rng: RngStream,
        step: int = 1,
    ) -> EmpiricalDistribution:
        """m draws of r + γ·y at the single pair (x, a), y ~ f(. | x', a'), a' ~ π(x')."""
        if m < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {m}")
        xs = np.repeat(np.atleast_2d(np.asarray(x, dtype=float)), m, axis=0)
        acts = np.full(m, int(a))
        r, x_next = self.env.step(xs, acts, step, rng.derive("env"))
        a_next = self.policy.sample(x_next, rng.derive("action"))
        y = f.sample(x_next, a_next, rng.derive("model"))
        return EmpiricalDistribution(r + self.discount * y)


def apply_bellman(
    f: ConditionalDensityModel,
    env: Environment,
    policy: Policy,
    x: np.ndarray,
    a: int,
    gamma: Optional[float],
    m: int,
    rng: RngStream,
    step: int = 1,
) -> EmpiricalDistribution:
    return BellmanApplication(env, policy, gamma)(f, x, a, m, rng, step)
