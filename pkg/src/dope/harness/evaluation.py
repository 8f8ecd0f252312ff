# Distance between fitted and true conditional return distributions at ψ(good, h), a*_h

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..density_models.base import ConditionalDensityModel
from ..environments.combination_lock import GOOD, CombinationLock
from ..errors import InvalidArgumentError, MissingModelsError
from ..fle.artifacts import load_run_models, read_run_manifest
from ..mdp_core.policy import Policy, policy_from_dict
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution
from ..metrics.distances import HistogramSpec, empirical_tv, wasserstein1_1d
from .config import METRICS
from .experiment import register_model_import

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 20_000


def default_histogram(reward_dim: int) -> HistogramSpec:
    """100 bins over [-1.5, 1.5] for scalar returns, 30 per axis over [-4, 4]^2 otherwise."""
    if reward_dim == 1:
        return HistogramSpec.uniform(1, 100, -1.5, 1.5)
    return HistogramSpec.uniform(reward_dim, 30, -4.0, 4.0)


def environment_from_dict(content: dict) -> CombinationLock:
    content = dict(content)
    kind = content.pop("kind", None)
    if kind != "combination_lock":
        raise InvalidArgumentError(f"No ground-truth sampler for environment kind '{kind}'")
    content["optimal_actions"] = tuple(content["optimal_actions"])
    return CombinationLock(**content)


@dataclass(frozen=True, eq=False)
class RunRecord:
    """A finished run directory with the environment and policy it was trained for."""

    directory: Path
    algorithm: str
    seed: int
    env: CombinationLock
    policy: Policy

    @classmethod
    def read(cls, directory: Union[str, Path]) -> "RunRecord":
        manifest = read_run_manifest(directory)
        try:
            experiment = manifest["experiment"]
        except KeyError:
            raise InvalidArgumentError(f"Run '{directory}' was not written by an experiment run") from None
        if experiment.get("model_import"):
            register_model_import(experiment["family"], experiment["model_import"])
        return cls(
            directory=Path(directory),
            algorithm=experiment["algorithm"],
            seed=int(experiment["seed"]),
            env=environment_from_dict(experiment["environment"]),
            policy=policy_from_dict(experiment["policy"]),
        )


@dataclass(frozen=True)
class Measurement:
    h: int
    algorithm: str
    metric: str
    value: float
    seed: int


def true_conditional(env: CombinationLock, policy: Policy, h: int, m: int, rng: RngStream) -> EmpiricalDistribution:
    """Rollouts of π from the good latent state at step h after forcing a*_h."""
    return env.conditional_returns(h, policy, m, rng, latent=GOOD)


def evaluate_run(
    record: RunRecord,
    steps: Sequence[int],
    metrics: Sequence[str] = ("tv",),
    samples: int = DEFAULT_SAMPLES,
    histogram: Optional[HistogramSpec] = None,
    models: Optional[Dict[int, ConditionalDensityModel]] = None,
) -> List[Measurement]:
    """Distances between E_{x~ψ(good,h)} f̂_h(x, a*_h) and the true conditional, per step and metric."""
    unknown = [k for k in metrics if k not in METRICS]
    if unknown:
        raise InvalidArgumentError(f"Unknown metrics {unknown}; choose from {METRICS}")
    env = record.env
    histogram = histogram or default_histogram(env.reward_dim)
    if models is None:
        models = load_run_models(record.directory, steps)

    out = []
    for h in steps:
        rng = RngStream(record.seed).derive("eval", h)
        x = env.observe(np.full(samples, GOOD), h, rng.derive("observe"))
        a = np.full(samples, env.optimal_action(h))
        fitted = EmpiricalDistribution(models[h].sample(x, a, rng.derive("model")))
        truth = true_conditional(env, record.policy, h, samples, rng.derive("truth"))
        for metric in metrics:
            if metric == "tv":
                value = empirical_tv(fitted, truth, histogram)
            else:
                value = wasserstein1_1d(fitted, truth, rng.derive("w1"))
            logger.debug("%s seed %d h=%d %s=%.4f", record.algorithm, record.seed, h, metric, value)
            out.append(Measurement(h, record.algorithm, metric, value, record.seed))
    return out


def evaluate_runs(
    run_dirs: Sequence[Union[str, Path]],
    steps: Sequence[int],
    metrics: Sequence[str] = ("tv",),
    samples: int = DEFAULT_SAMPLES,
    histogram: Optional[HistogramSpec] = None,
) -> List[Measurement]:
    """Evaluate every run; all missing models are reported together before any sampling."""
    records = [RunRecord.read(d) for d in run_dirs]
    loaded, gaps = [], []
    for record in records:
        try:
            loaded.append(load_run_models(record.directory, steps))
        except MissingModelsError as ex:
            gaps.append(str(ex))
    if gaps:
        raise MissingModelsError("; ".join(gaps))

    measurements = []
    for record, models in zip(records, loaded):
        measurements.extend(evaluate_run(record, steps, metrics, samples, histogram, models))
        logger.info("Evaluated %s (seed %d) at steps %s", record.algorithm, record.seed, list(steps))
    return measurements
