# Fitted Likelihood Estimation: backward MLE sweep (finite horizon) and iterated MLE (discounted)

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from ..density_models.base import ConditionalDensityModel, OptimizerConfig
from ..density_models.point_mass import PointMassModel
from ..density_models.registry import ModelSpec, model_fit
from ..errors import InvalidArgumentError, TrainingAbortedError
from ..mdp_core.dataset import SPLIT_MODES, split_dataset, step_subsets
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import OfflineDataset
from .artifacts import RunArtifacts
from .estimator import InitialSampler, ReturnEstimator
from .targets import RegressionTargetSet, build_targets_discounted, build_targets_finite

logger = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class FleFiniteConfig:
    """Finite-horizon FLE

    .. parameter:: Horizon H
    .. parameter:: Model spec, shared by all steps or one per step (index h-1)
    .. parameter:: Target policy π
    .. parameter:: Optimizer settings
    .. parameter:: Seed
    .. parameter:: Split mode, 'stratified' by recorded step or 'random'
    .. parameter:: Initial-state sampler for the final estimator
    .. parameter:: Run artifact directory
    .. parameter:: Dump targets_h.csv per step
    """

    horizon: int
    model: Union[ModelSpec, Sequence[ModelSpec]]
    policy: Policy
    optimizer: OptimizerConfig = OptimizerConfig()
    seed: int = 0
    split: str = "stratified"
    initial_sampler: Optional[InitialSampler] = None
    artifact_dir: Optional[Path] = None
    dump_targets: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {self.horizon}")
        if self.split not in SPLIT_MODES:
            raise InvalidArgumentError(f"split must be one of {SPLIT_MODES}, got '{self.split}'")
        if not isinstance(self.model, ModelSpec) and len(self.model) != self.horizon:
            raise InvalidArgumentError("Per-step model specs need one entry per step")

    def model_for(self, h: int) -> ModelSpec:
        return self.model if isinstance(self.model, ModelSpec) else self.model[h - 1]


def default_iterations(n: int, gamma: float) -> int:
    """T = ceil(log n / (2 log(1/γ))), at least 1."""
    if gamma <= 0.0:
        return 1
    return max(1, math.ceil(math.log(n) / (2.0 * math.log(1.0 / gamma))))


@dataclass(frozen=True, eq=False)
class FleInfiniteConfig:
    """Discounted FLE

    .. parameter:: Discount γ
    .. parameter:: Model spec
    .. parameter:: Target policy π
    .. parameter:: Iterations T (default ceil(log n / (2 log(1/γ))))
    .. parameter:: Optimizer settings
    .. parameter:: Seed
    .. parameter:: Initial model f̂_0 (default a point mass at zero)
    .. parameter:: Initial-state sampler for the final estimator
    .. parameter:: Run artifact directory
    .. parameter:: Dump targets_t.csv per iteration
    """

    gamma: float
    model: ModelSpec
    policy: Policy
    iterations: Optional[int] = None
    optimizer: OptimizerConfig = OptimizerConfig()
    seed: int = 0
    initial_model: Optional[ConditionalDensityModel] = None
    initial_sampler: Optional[InitialSampler] = None
    artifact_dir: Optional[Path] = None
    dump_targets: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidArgumentError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.iterations is not None and self.iterations < 1:
            raise InvalidArgumentError(f"iterations must be >= 1, got {self.iterations}")


def _fit_step(
    spec: ModelSpec,
    targets: RegressionTargetSet,
    opt: OptimizerConfig,
    rng: RngStream,
    step: int,
    seed: int,
) -> ConditionalDensityModel:
    try:
        return model_fit(spec, targets.x, targets.a, targets.z, opt, rng)
    except TrainingAbortedError as ex:
        tuple_index = None if ex.tuple_index is None else int(targets.source[ex.tuple_index])
        raise TrainingAbortedError(ex.message, step=step, seed=seed, tuple_index=tuple_index) from ex


def fle_finite(dataset: OfflineDataset, config: FleFiniteConfig) -> ReturnEstimator:
    """Fit f̂_H, ..., f̂_1 backwards, each on its own subset of the data."""
    H = config.horizon
    rng = RngStream(config.seed)
    subsets = step_subsets(dataset, H, config.split, rng)

    artifacts = RunArtifacts(config.artifact_dir, config.dump_targets)
    hashes = {h: subsets[h - 1].content_hash() for h in range(1, H + 1)}
    models = {}
    f_next = None
    for h in range(H, 0, -1):
        try:
            targets = build_targets_finite(subsets[h - 1], h, f_next, config.policy, rng.derive("targets", h), H)
        except TrainingAbortedError as ex:
            raise ex.with_context(seed=config.seed) from ex
        model = _fit_step(config.model_for(h), targets, config.optimizer, rng.derive("fit", h), h, config.seed)
        logger.info(
            "Fitted f_%d on %d targets (avg log-likelihood %.4f -> %.4f)",
            h,
            len(targets),
            model.last_fit.initial_ll,
            model.last_fit.final_ll,
        )
        models[h] = f_next = model
        artifacts.save_model(h, model)
        artifacts.save_targets(h, targets)

    manifest = {
        "algorithm": "fle-finite",
        "seed": config.seed,
        "horizon": H,
        "split": config.split,
        "optimizer": asdict(config.optimizer),
        "subset_hashes": {str(h): hashes[h] for h in range(1, H + 1)},
        # f̂_h depends on D_h, ..., D_H only
        "consumed": {str(h): [hashes[k] for k in range(h, H + 1)] for h in range(1, H + 1)},
    }
    artifacts.write_manifest(manifest)
    return ReturnEstimator(models, config.policy, config.initial_sampler, manifest=manifest)


def fle_infinite(dataset: OfflineDataset, config: FleInfiniteConfig) -> ReturnEstimator:
    """Fit f̂_1, ..., f̂_T toward r + γ·f̂_{t-1}, each iteration on its own subset of the data."""
    T = config.iterations or default_iterations(len(dataset), config.gamma)
    rng = RngStream(config.seed)
    subsets = split_dataset(dataset, T, rng.derive("split"))
    spec = config.model
    f_prev = config.initial_model or PointMassModel(spec.feature_map, spec.n_actions, spec.dim)

    artifacts = RunArtifacts(config.artifact_dir, config.dump_targets)
    hashes = {t: subsets[t - 1].content_hash() for t in range(1, T + 1)}
    models = {}
    for t in range(1, T + 1):
        try:
            targets = build_targets_discounted(
                subsets[t - 1], f_prev, config.policy, config.gamma, rng.derive("targets", t), iteration=t
            )
        except TrainingAbortedError as ex:
            raise ex.with_context(seed=config.seed) from ex
        f_prev = _fit_step(spec, targets, config.optimizer, rng.derive("fit", t), t, config.seed)
        logger.info("Iteration %d/%d fitted on %d targets", t, T, len(targets))
        models[t] = f_prev
        artifacts.save_model(t, f_prev)
        artifacts.save_targets(t, targets)

    manifest = {
        "algorithm": "fle-infinite",
        "seed": config.seed,
        "gamma": config.gamma,
        "iterations": T,
        "optimizer": asdict(config.optimizer),
        "subset_hashes": {str(t): hashes[t] for t in range(1, T + 1)},
        "consumed": {str(t): [hashes[k] for k in range(1, t + 1)] for t in range(1, T + 1)},
    }
    artifacts.write_manifest(manifest)
    return ReturnEstimator(models, config.policy, config.initial_sampler, gamma=config.gamma, manifest=manifest)
