# Categorical TD: backward per-step cross-entropy fits to projected Bellman targets

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..density_models.base import KeyGroups, OptimizerConfig
from ..density_models.categorical import AtomGrid, CategoricalGrid
from ..density_models.features import FeatureMap
from ..errors import InvalidArgumentError
from ..fle.artifacts import RunArtifacts
from ..fle.estimator import InitialSampler, ReturnEstimator
from ..mdp_core.dataset import SPLIT_MODES, step_subsets
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import DatasetMeta, OfflineDataset

logger = logging.getLogger(__name__)

# Atom-row products handled per projection chunk
CHUNK_ELEMENTS = 200_000


@dataclass(frozen=True, eq=False)
class CategoricalTdConfig:
    """Categorical TD

    .. parameter:: Horizon H
    .. parameter:: Conditioning cells, shared with the FLE models
    .. parameter:: Number of actions
    .. parameter:: Lower end of the atom range, scalar or per dimension
    .. parameter:: Upper end of the atom range, scalar or per dimension
    .. parameter:: Atoms per dimension
    .. parameter:: Optimizer settings of every cross-entropy fit
    .. parameter:: Seed
    .. parameter:: Split mode, 'stratified' by recorded step or 'random'
    .. parameter:: Initial-state sampler for the final estimator
    .. parameter:: Run artifact directory
    """

    horizon: int
    feature_map: FeatureMap
    n_actions: int
    low: Union[float, Sequence[float]] = -1.5
    high: Union[float, Sequence[float]] = 1.5
    n_atoms: int = 100
    optimizer: OptimizerConfig = OptimizerConfig(lr=1e-2, iterations=200)
    seed: int = 0
    split: str = "stratified"
    initial_sampler: Optional[InitialSampler] = None
    artifact_dir: Optional[Path] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {self.horizon}")
        if self.split not in SPLIT_MODES:
            raise InvalidArgumentError(f"split must be one of {SPLIT_MODES}, got '{self.split}'")

    def bounds(self, dim: int) -> np.ndarray:
        return np.stack([np.broadcast_to(self.low, (dim,)), np.broadcast_to(self.high, (dim,))]).astype(float)


def next_step_distribution(model: CategoricalGrid, policy: Policy, x_next: np.ndarray) -> np.ndarray:
    """Σ_a' π(a'|x') p(. | x', a') per row, shape (n, atoms)."""
    pi = policy.probs(x_next)
    out = np.zeros((x_next.shape[0], model.grid.size))
    probs = model.probs
    for a_next in range(model.n_actions):
        keys = model.keys(x_next, np.full(x_next.shape[0], a_next))
        out += pi[:, a_next, None] * probs[keys]
    return out


def projected_targets(
    grid: AtomGrid,
    keys: np.ndarray,
    r: np.ndarray,
    next_probs: Optional[np.ndarray],
    n_keys: int,
) -> np.ndarray:
    """Per-key sum of the projections of r ⊕ (next-step distribution shifted by r), shape (n_keys, atoms)."""
    if next_probs is None:
        return grid.project_distribution(keys, r, np.ones(r.shape[0]), n_keys)
    support = grid.support()
    out = np.zeros((n_keys, grid.size))
    chunk = max(1, CHUNK_ELEMENTS // grid.size)
    for start in range(0, r.shape[0], chunk):
        rows = slice(start, start + chunk)
        z = (r[rows, None, :] + support[None, :, :]).reshape(-1, grid.dim)
        out += grid.project_distribution(np.repeat(keys[rows], grid.size), z, next_probs[rows].ravel(), n_keys)
    return out


def categorical_td_run(
    dataset: OfflineDataset,
    meta: DatasetMeta,
    policy: Policy,
    config: CategoricalTdConfig,
    rng: Optional[RngStream] = None,
) -> ReturnEstimator:
    """Fit p_H, ..., p_1 backwards; step h targets the projected law of r + Z_{h+1}(x', a'), a' ~ π(x')."""
    H = config.horizon
    rng = rng or RngStream(config.seed)
    subsets = step_subsets(dataset, H, config.split, rng)
    bounds = config.bounds(meta.reward_dim)
    artifacts = RunArtifacts(config.artifact_dir)

    models = {}
    model_next = None
    for h in range(H, 0, -1):
        subset = subsets[h - 1]
        model = CategoricalGrid(config.feature_map, config.n_actions, meta.reward_dim, bounds, config.n_atoms)
        outside = ((subset.r < bounds[0]) | (subset.r > bounds[1])).any(axis=1).sum()
        if outside:
            logger.warning("Step %d: %d rewards fall outside the atom range and are clipped", h, outside)

        groups = KeyGroups(model.keys(subset.x, subset.a), model.n_keys)
        next_probs = None if model_next is None else next_step_distribution(model_next, policy, subset.x_next)
        total = projected_targets(model.grid, groups.keys, subset.r, next_probs, model.n_keys)
        targets = total / np.maximum(groups.counts, 1)[:, None]
        model.last_fit = model.fit_targets(targets, groups.counts, config.optimizer)
        logger.info(
            "Categorical TD step %d: cross-entropy %.4f -> %.4f",
            h,
            -model.last_fit.initial_ll,
            -model.last_fit.final_ll,
        )
        models[h] = model_next = model
        artifacts.save_model(h, model)

    manifest = {
        "algorithm": "cate-td",
        "seed": config.seed,
        "horizon": H,
        "split": config.split,
        "n_atoms": config.n_atoms,
        "optimizer": asdict(config.optimizer),
        "subset_hashes": {str(h): subsets[h - 1].content_hash() for h in range(1, H + 1)},
    }
    artifacts.write_manifest(manifest)
    return ReturnEstimator(models, policy, config.initial_sampler, manifest=manifest)
