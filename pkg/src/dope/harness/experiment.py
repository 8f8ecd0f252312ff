# Dataset generation and training runs of an experiment config

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from ..baselines.categorical_td import CategoricalTdConfig, categorical_td_run
from ..baselines.quantile_td import QuantileTdConfig, quantile_td_run
from ..density_models.base import ConditionalDensityModel
from ..density_models.features import CombinationLockCells
from ..density_models.registry import ModelRegistry, ModelSpec
from ..environments.combination_lock import CombinationLock, generate_offline_dataset
from ..errors import ConfigurationError
from ..fle.algorithms import FleFiniteConfig, fle_finite
from ..fle.artifacts import config_hash, update_run_manifest
from ..fle.estimator import ReturnEstimator
from ..load import dynamic_import
from ..mdp_core.dataset import read_dataset_csv, write_dataset_csv
from ..mdp_core.rng import RngStream
from ..mdp_core.types import OfflineDataset
from ..workers import run_jobs
from .config import AlgorithmConfig, ExperimentConfig

logger = logging.getLogger(__name__)


def dataset_path(config: ExperimentConfig, seed: int) -> Path:
    return Path(config.output_dir) / "data" / f"dataset_seed{config.data.seed_for(seed)}.csv"


def run_dir(config: ExperimentConfig, algorithm: str, seed: int) -> Path:
    return Path(config.output_dir) / algorithm / f"seed-{seed}"


def make_dataset(config: ExperimentConfig, seed: int) -> OfflineDataset:
    """Offline data of one run: read from `data.path`, else generated from the data seed."""
    env = config.environment.build()
    if config.data.path:
        dataset = read_dataset_csv(config.data.path)
        if dataset.meta != env.meta():
            raise ConfigurationError(f"Dataset {config.data.path} was not generated by the configured environment")
        return dataset
    return generate_offline_dataset(env, config.data.per_cell, RngStream(config.data.seed_for(seed)).derive("data"))


def generate_data(config: ExperimentConfig, seed: int, path: Optional[Union[str, Path]] = None) -> Path:
    """Write the dataset of `seed` as CSV with its manifest."""
    env = config.environment.build()
    dataset = generate_offline_dataset(env, config.data.per_cell, RngStream(config.data.seed_for(seed)).derive("data"))
    return write_dataset_csv(
        dataset,
        path or dataset_path(config, seed),
        extra_manifest={
            "experiment": config.name,
            "seed": config.data.seed_for(seed),
            "environment": env.to_dict(),
            "dataset_hash": dataset.content_hash(),
        },
    )


def register_model_import(family: str, model_import: str):
    """Register the model class named by `model_import` under `family`, once per process."""
    try:
        model_type = dynamic_import(model_import)
    except (ValueError, AttributeError, ImportError) as ex:
        raise ConfigurationError(f"Cannot import model class '{model_import}': {ex}") from ex
    if not (isinstance(model_type, type) and issubclass(model_type, ConditionalDensityModel)):
        raise ConfigurationError(f"'{model_import}' is not a ConditionalDensityModel subclass")
    if family in ModelRegistry.families():
        if ModelRegistry.get_model_type(family) is not model_type:
            raise ConfigurationError(f"Model family '{family}' is already registered to another class")
        return
    ModelRegistry.register_model_type(family, model_type)


def model_spec(algorithm: AlgorithmConfig, env: CombinationLock) -> ModelSpec:
    fmap, A, d = CombinationLockCells(env.horizon), env.n_actions, env.reward_dim
    if algorithm.name == "fle-gmm":
        return ModelSpec("gmm", fmap, A, d, options={"n_components": algorithm.n_components})
    if algorithm.name == "fle-categorical":
        bounds = [[algorithm.low] * d, [algorithm.high] * d]
        return ModelSpec("categorical", fmap, A, d, bounds=bounds, options={"n_atoms": algorithm.n_atoms})
    if algorithm.name == "fle-fqe":
        return ModelSpec("fixed_gaussian", fmap, A, d, options={"sigma": algorithm.sigma})
    if algorithm.name == "fle-custom":
        register_model_import(algorithm.family, algorithm.model_import)
        return ModelSpec(algorithm.family, fmap, A, d, options=dict(algorithm.options))
    raise ConfigurationError(f"'{algorithm.name}' is not an FLE variant")


def train(
    config: ExperimentConfig,
    algorithm: AlgorithmConfig,
    seed: int,
    dataset: OfflineDataset,
    artifact_dir: Optional[Path] = None,
) -> ReturnEstimator:
    """Train one configured algorithm on `dataset`."""
    env = config.environment.build()
    policy = config.environment.policy()
    if algorithm.name.startswith("fle-"):
        fle_config = FleFiniteConfig(
            horizon=env.horizon,
            model=model_spec(algorithm, env),
            policy=policy,
            optimizer=algorithm.optimizer(),
            seed=seed,
            split=algorithm.split,
            initial_sampler=env.sample_initial,
            artifact_dir=artifact_dir,
        )
        return fle_finite(dataset, fle_config)

    if algorithm.name == "cate-td":
        cate_config = CategoricalTdConfig(
            horizon=env.horizon,
            feature_map=config.environment.feature_map(),
            n_actions=env.n_actions,
            low=algorithm.low,
            high=algorithm.high,
            n_atoms=algorithm.n_atoms,
            optimizer=algorithm.optimizer(),
            seed=seed,
            split=algorithm.split,
            initial_sampler=env.sample_initial,
            artifact_dir=artifact_dir,
        )
        return categorical_td_run(dataset, dataset.meta, policy, cate_config)

    quantile_config = QuantileTdConfig(
        horizon=env.horizon,
        feature_map=config.environment.feature_map(),
        n_actions=env.n_actions,
        n_quantiles=algorithm.n_quantiles,
        kappa=algorithm.kappa,
        optimizer=algorithm.optimizer(),
        seed=seed,
        split=algorithm.split,
        initial_sampler=env.sample_initial,
        artifact_dir=artifact_dir,
    )
    return quantile_td_run(dataset, dataset.meta, policy, quantile_config)


def run_seed(config: ExperimentConfig, algorithm: str, seed: int) -> str:
    """Train one (algorithm, seed) cell into its run directory and annotate the manifest."""
    alg = config.algorithm(algorithm)
    env = config.environment.build()
    dataset = make_dataset(config, seed)
    out = run_dir(config, algorithm, seed)
    logger.info("Training %s (seed %d) on %d tuples into %s", algorithm, seed, len(dataset), out)
    train(config, alg, seed, dataset, artifact_dir=out)
    update_run_manifest(
        out,
        {
            "experiment": {
                "name": config.name,
                "algorithm": algorithm,
                "seed": seed,
                "data_seed": config.data.seed_for(seed),
                "config_hash": config_hash(config.to_dict()),
                "dataset_hash": dataset.content_hash(),
                "environment": env.to_dict(),
                "policy": config.environment.policy().to_dict(),
                "family": alg.family,
                "model_import": alg.model_import,
            }
        },
    )
    return str(out)


def run_experiment(
    config: ExperimentConfig,
    seeds: Optional[Sequence[int]] = None,
    algorithms: Optional[Sequence[str]] = None,
    workers: Optional[int] = None,
    raise_errors: bool = True,
) -> List[Union[str, BaseException]]:
    """Train every (algorithm, seed) cell in the worker pool; returns run directories in job order."""
    seeds = list(config.seeds if seeds is None else seeds)
    names = [a.name for a in config.algorithms] if algorithms is None else list(algorithms)
    for name in names:
        config.algorithm(name)
    jobs = [(run_seed, (config, name, seed)) for name in names for seed in seeds]
    return run_jobs(jobs, workers, raise_errors=raise_errors)
