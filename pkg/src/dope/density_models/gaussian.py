import math

import numpy as np

from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import ConditionalDensityModel, FitReport, KeyGroups, OptimizerConfig, Params, floor_rows
from .features import FeatureMap


class FixedVarianceGaussian(ConditionalDensityModel):
    """N(g(x, a), σ²I) with a per-key mean g and a constant σ.

    With σ fixed the maximum-likelihood mean is the least-squares solution, i.e. the
    per-key average of the targets, so fitting is exact.
    """

    family = "fixed_gaussian"

    def __init__(self, feature_map: FeatureMap, n_actions: int, dim: int = 1, bounds=None, sigma: float = 1.0):
        super().__init__(feature_map, n_actions, dim, bounds)
        if not sigma > 0:
            raise InvalidArgumentError(f"sigma must be > 0, got {sigma}")
        self.sigma = float(sigma)
        self.mean = np.zeros((self.n_keys, dim))

    def options(self) -> dict:
        return {"sigma": self.sigma}

    def get_parameters(self) -> Params:
        return {"mean": self.mean}

    def set_parameters(self, params: Params):
        mean = np.asarray(params["mean"], dtype=float)
        if mean.shape != self.mean.shape:
            raise InvalidArgumentError(f"Mean must have shape {self.mean.shape}, got {mean.shape}")
        self.mean = mean.copy()

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        sq = ((z - self.mean[keys]) ** 2).sum(axis=1)
        return -0.5 * sq / self.sigma**2 - self.dim * (math.log(self.sigma) + 0.5 * math.log(2 * math.pi))

    def _average_floored(self, keys: np.ndarray, z: np.ndarray) -> float:
        return float(floor_rows(self._log_density_keys(keys, z), self.inside_bounds(z))[0].mean())

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        initial = self._average_floored(groups.keys, z)
        present = groups.present
        self.mean[present] = groups.sum(z)[present] / groups.counts[present, None]
        final = self._average_floored(groups.keys, z)
        return FitReport(initial, final, iterations=1, accepted=int(present.size))

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        return self.mean[keys] + self.sigma * rng.normal(size=(keys.shape[0], self.dim))
