# Quantile-regression TD with the quantile Huber loss, trained backwards per step

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..density_models.base import ConditionalDensityModel, FitReport, KeyGroups, OptimizerConfig, Params, monotone_ascent
from ..density_models.features import FeatureMap
from ..density_models.registry import ModelRegistry
from ..errors import InvalidArgumentError, TrainingAbortedError, UnsupportedDimensionError
from ..fle.artifacts import RunArtifacts
from ..fle.estimator import InitialSampler, ReturnEstimator
from ..fle.targets import build_targets_finite
from ..mdp_core.dataset import SPLIT_MODES, step_subsets
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import DatasetMeta, OfflineDataset

logger = logging.getLogger(__name__)


def quantile_midpoints(n_quantiles: int) -> np.ndarray:
    """τ_i = (2i - 1) / (2N), i = 1..N."""
    return (2.0 * np.arange(1, n_quantiles + 1) - 1.0) / (2.0 * n_quantiles)


def quantile_huber(u: np.ndarray, taus: np.ndarray, kappa: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quantile Huber loss of residuals u = z - θ, shape (n, N), and its derivative in u."""
    weight = np.abs(taus[None, :] - (u < 0.0))
    absolute = np.abs(u)
    huber = np.where(absolute <= kappa, 0.5 * u**2, kappa * (absolute - 0.5 * kappa))
    return weight * huber / kappa, weight * np.clip(u, -kappa, kappa) / kappa


class QuantileTdModel(ConditionalDensityModel):
    """N quantile locations per (cell, action) key over scalar returns.

    Samples pick a quantile uniformly. The density is that of the piecewise-linear
    CDF through the sorted quantiles, so it is zero outside [θ_(1), θ_(N)].
    """

    family = "quantile"

    def __init__(
        self,
        feature_map: FeatureMap,
        n_actions: int,
        dim: int = 1,
        bounds=None,
        n_quantiles: int = 100,
        kappa: float = 1.0,
    ):
        if dim != 1:
            raise UnsupportedDimensionError("Quantile regression TD supports scalar rewards only")
        super().__init__(feature_map, n_actions, dim, bounds)
        if n_quantiles < 2:
            raise InvalidArgumentError(f"n_quantiles must be >= 2, got {n_quantiles}")
        if not kappa > 0:
            raise InvalidArgumentError(f"kappa must be > 0, got {kappa}")
        self.n_quantiles = n_quantiles
        self.kappa = float(kappa)
        self.locations = np.zeros((self.n_keys, n_quantiles))

    @property
    def taus(self) -> np.ndarray:
        return quantile_midpoints(self.n_quantiles)

    @property
    def quantiles(self) -> np.ndarray:
        """Readout: locations sorted per key."""
        return np.sort(self.locations, axis=1)

    def options(self) -> dict:
        return {"n_quantiles": self.n_quantiles, "kappa": self.kappa}

    def get_parameters(self) -> Params:
        return {"locations": self.locations}

    def set_parameters(self, params: Params):
        locations = np.asarray(params["locations"], dtype=float)
        if locations.shape != self.locations.shape:
            raise InvalidArgumentError(f"Locations must have shape {self.locations.shape}, got {locations.shape}")
        self.locations = locations.copy()

    def objective(self, params: Params, groups: KeyGroups, z: np.ndarray) -> Tuple[np.ndarray, Params]:
        """Per-key negative quantile Huber loss and its gradient in the locations."""
        u = z - params["locations"][groups.keys]
        loss, slope = quantile_huber(u, self.taus, self.kappa)
        return -groups.mean(loss.sum(axis=1)), {"locations": groups.mean(slope)}

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        # Every key starts with all quantiles at its mean target
        mean = groups.mean(z)[:, 0]
        mean[~groups.active] = z.mean()
        self.locations = np.repeat(mean[:, None], self.n_quantiles, axis=1)
        params, report = monotone_ascent(
            self.get_parameters(),
            lambda p: self.objective(p, groups, z),
            groups.active,
            opt,
            weights=groups.counts,
        )
        self.set_parameters(params)
        return report

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        index = rng.integers(0, self.n_quantiles, size=keys.shape[0])
        return self.quantiles[keys, index][:, None]

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        q = self.quantiles[keys]
        z = z[:, 0]
        position = (q <= z[:, None]).sum(axis=1)
        inside = (position > 0) & (position < self.n_quantiles)
        lower = np.clip(position - 1, 0, self.n_quantiles - 2)
        rows = np.arange(keys.shape[0])
        gap = np.maximum(q[rows, lower + 1] - q[rows, lower], 1e-12)
        with np.errstate(divide="ignore"):
            return np.where(inside, np.log(1.0 / (self.n_quantiles * gap)), -np.inf)


ModelRegistry.register_model_type(QuantileTdModel.family, QuantileTdModel)


@dataclass(frozen=True, eq=False)
class QuantileTdConfig:
    """Quantile-regression TD

    .. parameter:: Horizon H
    .. parameter:: Conditioning cells, shared with the FLE models
    .. parameter:: Number of actions
    .. parameter:: Number of quantiles N
    .. parameter:: Huber threshold κ
    .. parameter:: Optimizer settings of every per-step fit
    .. parameter:: Seed
    .. parameter:: Split mode, 'stratified' by recorded step or 'random'
    .. parameter:: Initial-state sampler for the final estimator
    .. parameter:: Run artifact directory
    """

    horizon: int
    feature_map: FeatureMap
    n_actions: int
    n_quantiles: int = 100
    kappa: float = 1.0
    optimizer: OptimizerConfig = OptimizerConfig(lr=1e-1, iterations=200)
    seed: int = 0
    split: str = "stratified"
    initial_sampler: Optional[InitialSampler] = None
    artifact_dir: Optional[Path] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {self.horizon}")
        if self.split not in SPLIT_MODES:
            raise InvalidArgumentError(f"split must be one of {SPLIT_MODES}, got '{self.split}'")


def quantile_td_run(
    dataset: OfflineDataset,
    meta: DatasetMeta,
    policy: Policy,
    config: QuantileTdConfig,
    rng: Optional[RngStream] = None,
) -> ReturnEstimator:
    """Fit θ_H, ..., θ_1 backwards against z = r + y, y a uniformly drawn next-step quantile."""
    if meta.reward_dim != 1:
        raise UnsupportedDimensionError(
            f"Quantile regression TD is defined for scalar rewards; got reward dimension {meta.reward_dim}"
        )
    H = config.horizon
    rng = rng or RngStream(config.seed)
    subsets = step_subsets(dataset, H, config.split, rng)
    artifacts = RunArtifacts(config.artifact_dir)

    models = {}
    model_next = None
    for h in range(H, 0, -1):
        subset = subsets[h - 1]
        targets = build_targets_finite(subset, h, model_next, policy, rng.derive("targets", h), H)
        model = QuantileTdModel(config.feature_map, config.n_actions, n_quantiles=config.n_quantiles, kappa=config.kappa)
        try:
            model.fit(targets.x, targets.a, targets.z, config.optimizer, rng.derive("fit", h))
        except TrainingAbortedError as ex:
            raise ex.with_context(step=h, seed=config.seed) from ex
        logger.info("Quantile TD step %d: loss %.4f -> %.4f", h, -model.last_fit.initial_ll, -model.last_fit.final_ll)
        models[h] = model_next = model
        artifacts.save_model(h, model)

    manifest = {
        "algorithm": "quantile-td",
        "seed": config.seed,
        "horizon": H,
        "split": config.split,
        "n_quantiles": config.n_quantiles,
        "kappa": config.kappa,
        "optimizer": asdict(config.optimizer),
        "subset_hashes": {str(h): subsets[h - 1].content_hash() for h in range(1, H + 1)},
    }
    artifacts.write_manifest(manifest)
    return ReturnEstimator(models, policy, config.initial_sampler, manifest=manifest)
