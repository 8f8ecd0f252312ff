from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..density_models.base import ConditionalDensityModel
from ..errors import InvalidArgumentError, MissingModelsError
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution
from ..metrics.functionals import cvar

InitialSampler = Callable[[int, RngStream], np.ndarray]


@dataclass(eq=False)
class ReturnEstimator:
    """Fitted return distribution, represented as a sampler.

    Finite horizon: `models[h]` is f̂_h and the estimate is E_{x~μ, a~π(x)} f̂_1(x, a).
    Discounted: `models[t]` is f̂_t and the estimate uses the last iterate.
    """

    models: Dict[int, ConditionalDensityModel]
    policy: Policy
    initial_sampler: Optional[InitialSampler] = None
    gamma: Optional[float] = None
    manifest: dict = field(default_factory=dict)

    @property
    def finite_horizon(self) -> bool:
        return self.gamma is None

    @property
    def head(self) -> ConditionalDensityModel:
        if not self.models:
            raise MissingModelsError("Estimator holds no fitted models")
        return self.models[min(self.models)] if self.finite_horizon else self.models[max(self.models)]

    def model(self, h: int) -> ConditionalDensityModel:
        try:
            return self.models[h]
        except KeyError:
            raise MissingModelsError(f"No fitted model for step {h}") from None

    def sample(self, m: int, rng: RngStream) -> EmpiricalDistribution:
        """m draws of z with x ~ μ, a ~ π(x), z ~ f̂(. | x, a)."""
        if m < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {m}")
        if self.initial_sampler is None:
            raise InvalidArgumentError("Estimator has no initial-state sampler")
        x = self.initial_sampler(m, rng.derive("initial"))
        a = self.policy.sample(x, rng.derive("action"))
        return EmpiricalDistribution(self.head.sample(x, a, rng.derive("return")))

    def conditional_sample(self, h: int, x: np.ndarray, a: np.ndarray, rng: RngStream) -> EmpiricalDistribution:
        """One draw from f̂_h(. | x_i, a_i) per row."""
        return EmpiricalDistribution(self.model(h).sample(x, a, rng))

    def cvar(self, tau: float, m: int, rng: RngStream, grid_size: int = 10_001) -> float:
        """Plug-in CVaR_τ of the estimated return distribution."""
        return cvar(self.sample(m, rng), tau, grid_size)


def estimator_sample(est: ReturnEstimator, m: int, rng: RngStream) -> EmpiricalDistribution:
    return est.sample(m, rng)
