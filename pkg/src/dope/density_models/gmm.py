import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import ConditionalDensityModel, FitReport, KeyGroups, OptimizerConfig, Params, floor_rows, monotone_ascent
from .features import FeatureMap

logger = logging.getLogger(__name__)


def kmeans_pp_centers(z: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
    """k seeds drawn from the rows of z with probability proportional to the squared distance to the nearest seed."""
    centers = [z[rng.integers(z.shape[0])]]
    d2 = ((z - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        if d2.sum() > 0:
            index = rng.choice(z.shape[0], p=d2 / d2.sum())
        else:
            index = rng.integers(z.shape[0])
        centers.append(z[index])
        d2 = np.minimum(d2, ((z - centers[-1]) ** 2).sum(axis=1))
    return np.stack(centers)


class ConditionalGmm(ConditionalDensityModel):
    """Diagonal Gaussian mixture per (cell, action) key

    Parameters: weight logits (keys, K), means (keys, K, d) and log-stds (keys, K, d).
    Stds are floored at `std_floor_ratio` times the bounding-box diameter during fitting.
    """

    family = "gmm"

    def __init__(
        self,
        feature_map: FeatureMap,
        n_actions: int,
        dim: int = 1,
        bounds=None,
        n_components: int = 10,
        std_floor_ratio: float = 1e-3,
    ):
        super().__init__(feature_map, n_actions, dim, bounds)
        if n_components < 1:
            raise InvalidArgumentError(f"n_components must be >= 1, got {n_components}")
        self.n_components = n_components
        self.std_floor_ratio = std_floor_ratio
        self.logits = np.zeros((self.n_keys, n_components))
        self.means = np.zeros((self.n_keys, n_components, dim))
        self.log_stds = np.zeros((self.n_keys, n_components, dim))

    def options(self) -> dict:
        return {"n_components": self.n_components, "std_floor_ratio": self.std_floor_ratio}

    def get_parameters(self) -> Params:
        return {"logits": self.logits, "means": self.means, "log_stds": self.log_stds}

    def set_parameters(self, params: Params):
        K, d = self.n_components, self.dim
        expected = {"logits": (self.n_keys, K), "means": (self.n_keys, K, d), "log_stds": (self.n_keys, K, d)}
        for name, shape in expected.items():
            value = np.asarray(params[name], dtype=float)
            if value.shape != shape:
                raise InvalidArgumentError(f"GMM parameter '{name}' must have shape {shape}, got {value.shape}")
            setattr(self, name, value.copy())

    @property
    def weights(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    def std_floor(self) -> float:
        if self.bounds is None:
            return 0.0
        return self.std_floor_ratio * float(np.linalg.norm(self.bounds[1] - self.bounds[0]))

    # Likelihood

    def _component_terms(self, params: Params, keys: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, ...]:
        log_w = params["logits"] - logsumexp(params["logits"], axis=1, keepdims=True)
        ls = params["log_stds"][keys]
        inv = np.exp(-ls)
        u = (z[:, None, :] - params["means"][keys]) * inv
        log_normal = -0.5 * (u**2).sum(axis=2) - ls.sum(axis=2) - 0.5 * self.dim * math.log(2 * math.pi)
        lp = log_w[keys] + log_normal
        ll = logsumexp(lp, axis=1)
        return lp, ll, u, inv

    def objective(self, params: Params, groups: KeyGroups, z: np.ndarray) -> Tuple[np.ndarray, Params]:
        """Per-key average log-likelihood and its gradient with respect to every parameter."""
        lp, raw, u, inv = self._component_terms(params, groups.keys, z)
        ll, kept = floor_rows(raw, self.inside_bounds(z))
        # Floored rows are flat in every parameter
        resp = np.exp(lp - raw[:, None]) * kept[:, None]
        share = groups.mean(kept.astype(float))[:, None]
        grads = {
            "logits": groups.mean(resp) - softmax(params["logits"], axis=1) * share,
            "means": groups.mean(resp[:, :, None] * u * inv),
            "log_stds": groups.mean(resp[:, :, None] * (u**2 - 1.0)),
        }
        return groups.mean(ll), grads

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        _, ll, _, _ = self._component_terms(self.get_parameters(), keys, z)
        return ll

    # Fitting

    def initialize(self, groups: KeyGroups, z: np.ndarray, rng: RngStream):
        """Means at k-means++ seeds of each key's targets, stds at the targets' std, uniform weights.

        Keys without data are seeded from the pooled targets.
        """
        floor = max(self.std_floor(), 1e-12)
        span = self.bounds[1] - self.bounds[0] if self.bounds is not None else np.ones(self.dim)

        def seed(zk: np.ndarray, stream: RngStream) -> Tuple[np.ndarray, np.ndarray]:
            means = kmeans_pp_centers(zk, self.n_components, stream)
            std = zk.std(axis=0) if zk.shape[0] > 1 else span / 4.0
            return means, np.log(np.maximum(std, floor))

        pooled_means, pooled_ls = seed(z, rng.derive("pooled"))
        self.logits = np.zeros((self.n_keys, self.n_components))
        self.means = np.broadcast_to(pooled_means, self.means.shape).copy()
        self.log_stds = np.broadcast_to(pooled_ls, self.log_stds.shape).copy()
        for key in groups.present:
            means, ls = seed(z[groups.rows(key)], rng.derive("key", int(key)))
            self.means[key] = means
            self.log_stds[key] = ls

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        self.initialize(groups, z, rng.derive("init"))
        log_floor = math.log(max(self.std_floor(), 1e-300))

        def project(params: Params) -> Params:
            params["log_stds"] = np.maximum(params["log_stds"], log_floor)
            return params

        params, report = monotone_ascent(
            self.get_parameters(),
            lambda p: self.objective(p, groups, z),
            groups.active,
            opt,
            project=project,
            weights=groups.counts,
        )
        self.set_parameters(params)
        return report

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        component = rng.derive("component").categorical(self.weights[keys])
        noise = rng.derive("noise").normal(size=(keys.shape[0], self.dim))
        return self.means[keys, component] + np.exp(self.log_stds[keys, component]) * noise

    @classmethod
    def single(
        cls,
        feature_map: FeatureMap,
        n_actions: int,
        mean: np.ndarray,
        std: np.ndarray,
        bounds: Optional[np.ndarray] = None,
    ) -> "ConditionalGmm":
        """One-component model with the same Gaussian for every key."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        model = cls(feature_map, n_actions, dim=mean.shape[0], bounds=bounds, n_components=1)
        model.means[:] = mean
        model.log_stds[:] = np.log(np.broadcast_to(np.asarray(std, dtype=float), mean.shape))
        return model
