import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..environments.tabular import TabularMDP, discounted_occupancy, state_action_distributions
from ..errors import InvalidArgumentError
from ..mdp_core.policy import Policy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoverageEstimate:
    """Density-ratio coverage constant sup_{h,x,a} d^π_h(x, a) / ρ_h(x, a)

    .. parameter:: The constant C, infinite when ρ misses a pair π visits
    .. parameter:: (h, x, a) attaining the supremum
    """

    constant: float
    argmax: Optional[Tuple[int, int, int]] = None

    @property
    def covered(self) -> bool:
        return bool(np.isfinite(self.constant))


def coverage_constant_tabular(mdp: TabularMDP, policy: Policy, rho: np.ndarray) -> CoverageEstimate:
    """Exact coverage constant of ρ, shape (S, A) for every step or (H, S, A) per step.

    Finite horizon compares against d^π_h from the forward DP; discounted MDPs against
    the discounted occupancy (a single step, h = 1).
    """
    if mdp.horizon is not None:
        d = state_action_distributions(mdp, policy)
    else:
        d = discounted_occupancy(mdp, policy)[None]
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 2:
        rho = np.broadcast_to(rho, d.shape)
    if rho.shape != d.shape:
        raise InvalidArgumentError(f"ρ must have shape {d.shape[1:]} or {d.shape}, got {rho.shape}")

    visited = d > 0
    if (visited & (rho <= 0)).any():
        h, x, a = np.argwhere(visited & (rho <= 0))[0]
        logger.info("ρ misses the pair (x=%d, a=%d) visited at step %d", x, a, h + 1)
        return CoverageEstimate(float("inf"), (int(h) + 1, int(x), int(a)))

    ratio = np.where(visited, d / np.where(rho > 0, rho, 1.0), 0.0)
    h, x, a = np.unravel_index(np.argmax(ratio), ratio.shape)
    return CoverageEstimate(float(ratio[h, x, a]), (int(h) + 1, int(x), int(a)))
