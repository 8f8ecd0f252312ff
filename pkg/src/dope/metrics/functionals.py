from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from .distances import DiscreteLaw, Samples, as_distribution


@dataclass(frozen=True)
class CvarQuery:
    """CVaR_τ readout

    .. parameter:: Tail fraction τ in (0, 1]
    .. parameter:: Number of points of the b grid
    """

    tau: float
    grid_size: int = 10_001

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise InvalidArgumentError(f"tau must lie in (0, 1], got {self.tau}")
        if self.grid_size < 3:
            raise InvalidArgumentError(f"grid_size must be >= 3, got {self.grid_size}")


def cvar(samples: Samples, tau: float, grid_size: int = 10_001) -> float:
    """CVaR_τ = max_b b - E[(b - Z)^+]/τ over a uniform b grid spanning the samples padded by one step."""
    query = CvarQuery(tau, grid_size)
    z = np.sort(as_distribution(samples).scalar())
    lo, hi = z[0], z[-1]
    step = (hi - lo) / (query.grid_size - 3) if hi > lo else 1e-3
    b = lo - step + step * np.arange(query.grid_size)
    # E[(b - Z)^+] from prefix sums of the sorted samples
    below = np.searchsorted(z, b, side="right")
    prefix = np.concatenate([[0.0], np.cumsum(z)])
    shortfall = (below * b - prefix[below]) / z.shape[0]
    return float(np.max(b - shortfall / query.tau))


def discrete_cvar(law: DiscreteLaw, tau: float) -> float:
    """Exact CVaR_τ of a scalar discrete law; the concave objective peaks at an atom."""
    CvarQuery(tau)
    if law.dim != 1:
        raise InvalidArgumentError("CVaR is defined for scalar returns only")
    z = law.atoms[:, 0]
    shortfall = (law.weights[None, :] * np.maximum(z[:, None] - z[None, :], 0.0)).sum(axis=1)
    return float(np.max(z - shortfall / tau))
