import logging
import math

import numpy as np

from ..errors import InvalidArgumentError
from .environment import Environment
from .policy import Policy
from .rng import RngStream
from .types import EmpiricalDistribution

logger = logging.getLogger(__name__)


def truncation_length(gamma: float, reward_dim: int, tol: float = 1e-3, r_max: float = 1.0) -> int:
    """Smallest L with γ^L·r_max·√d/(1-γ) ≤ tol; the tail of a discounted return beyond L."""
    if not 0.0 <= gamma < 1.0:
        raise InvalidArgumentError(f"gamma must lie in [0, 1), got {gamma}")
    if gamma == 0.0:
        return 1
    bound = tol * (1.0 - gamma) / (r_max * math.sqrt(reward_dim))
    return max(1, math.ceil(math.log(bound) / math.log(gamma)))


def monte_carlo_returns(
    env: Environment,
    policy: Policy,
    m: int,
    rng: RngStream,
    tol: float = 1e-3,
) -> EmpiricalDistribution:
    """m i.i.d. returns of `policy` from the initial distribution of `env`.

    Discounted environments are truncated at `truncation_length(γ, d, tol)`.
    """
    if m < 1:
        raise InvalidArgumentError(f"m must be >= 1, got {m}")
    x = env.sample_initial(m, rng.derive("initial"))
    z = np.zeros((m, env.reward_dim))

    if env.horizon is not None:
        steps, discount = env.horizon, 1.0
    else:
        steps, discount = truncation_length(env.gamma, env.reward_dim, tol), env.gamma

    weight = 1.0
    for h in range(1, steps + 1):
        a = policy.sample(x, rng.derive("action", h))
        r, x = env.step(x, a, h, rng.derive("step", h))
        z += weight * r
        weight *= discount
    logger.debug("Rolled out %d returns over %d steps", m, steps)
    return EmpiricalDistribution(z)
