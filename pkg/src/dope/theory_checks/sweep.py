# Estimation error of FLE against the exact tabular oracle, over dataset sizes and seeds

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..density_models.base import OptimizerConfig
from ..density_models.features import OneHotStateCells
from ..density_models.mixture import TabularMixtureModel
from ..density_models.registry import ModelSpec
from ..environments.tabular import TabularMDP, generate_tabular_dataset, tabular_exact_return_dist
from ..errors import InvalidArgumentError
from ..fle.algorithms import FleFiniteConfig, fle_finite
from ..fle.estimator import ReturnEstimator
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..metrics.distances import HistogramSpec, empirical_tv, mixture_tv
from ..workers import run_jobs

logger = logging.getLogger(__name__)

EVAL_SAMPLES = 20_000


def tabular_mixture_spec(mdp: TabularMDP) -> ModelSpec:
    """The Bellman-complete class of a sparse-reward tabular MDP: mixtures over its reward densities."""
    return ModelSpec(
        "tabular_mixture",
        OneHotStateCells(mdp.n_states),
        mdp.n_actions,
        options={"dictionary": list(mdp.rewards)},
    )


def initial_pair_distribution(mdp: TabularMDP, policy: Policy) -> np.ndarray:
    """μ(x)·π(a|x), shape (S, A)."""
    return mdp.mu[:, None] * mdp.policy_table(policy)


def estimator_tv(estimator: ReturnEstimator, mdp: TabularMDP, policy: Policy, rng: RngStream) -> float:
    """TV between E_{μ,π} f̂_1 and Z^π.

    Exact (quadrature) when f̂_1 is a mixture over the MDP's own reward densities,
    otherwise a 100-bin histogram comparison on 20k samples per side.
    """
    q = initial_pair_distribution(mdp, policy)
    truth = tabular_exact_return_dist(mdp, policy)
    head = estimator.model(1)
    if isinstance(head, TabularMixtureModel) and head.dictionary == mdp.rewards:
        keys = head.keys(np.eye(mdp.n_states).repeat(mdp.n_actions, axis=0), np.tile(np.arange(mdp.n_actions), mdp.n_states))
        fitted = q.ravel() @ head.weights[keys]
        return mixture_tv(fitted, truth.marginal(1, q), mdp.rewards)

    sampled = estimator.sample(EVAL_SAMPLES, rng.derive("estimate"))
    exact = truth.sample(truth.marginal(1, q), EVAL_SAMPLES, rng.derive("oracle"))
    low = min(d.support[0] for d in mdp.rewards)
    high = max(d.support[1] for d in mdp.rewards)
    return empirical_tv(sampled, exact, HistogramSpec.uniform(1, 100, low, high))


def fle_error(
    mdp: TabularMDP,
    policy: Policy,
    spec: ModelSpec,
    n: int,
    seed: int,
    optimizer: OptimizerConfig,
    rho: Optional[np.ndarray] = None,
) -> float:
    """One FLE run on n fresh tuples (uniform ρ by default) and its TV error."""
    rng = RngStream(seed)
    rho = np.full((mdp.n_states, mdp.n_actions), 1.0 / (mdp.n_states * mdp.n_actions)) if rho is None else rho
    data = generate_tabular_dataset(mdp, rho, n, rng.derive("data"))
    config = FleFiniteConfig(
        horizon=mdp.horizon,
        model=spec,
        policy=policy,
        optimizer=optimizer,
        seed=seed,
        initial_sampler=mdp.sample_initial,
    )
    error = estimator_tv(fle_finite(data, config), mdp, policy, rng.derive("eval"))
    logger.info("n=%d seed=%d: TV error %.4f", n, seed, error)
    return error


@dataclass
class ErrorRateTable:
    """TV errors per dataset size, one entry per seed."""

    errors: Dict[int, List[float]] = field(default_factory=dict)

    @property
    def sizes(self) -> List[int]:
        return sorted(self.errors)

    def median(self, n: int) -> float:
        return float(np.median(self.errors[n]))

    def medians(self) -> List[float]:
        return [self.median(n) for n in self.sizes]

    def non_increasing(self) -> bool:
        medians = self.medians()
        return all(b <= a for a, b in zip(medians, medians[1:]))

    def rows(self) -> List[dict]:
        return [
            {"n": n, "median": self.median(n), "errors": " ".join(f"{e:.6f}" for e in self.errors[n])}
            for n in self.sizes
        ]


def error_rate_sweep(
    mdp: TabularMDP,
    policy: Policy,
    spec: Optional[ModelSpec],
    n_list: Sequence[int],
    seeds: Sequence[int],
    optimizer: OptimizerConfig = OptimizerConfig(lr=5e-2, iterations=500),
    rho: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
) -> ErrorRateTable:
    """TV(f̂, Z^π) for every (n, seed); the model class defaults to the exact tabular mixture."""
    if mdp.horizon is None:
        raise InvalidArgumentError("The error-rate sweep needs a finite-horizon MDP")
    if not n_list or not seeds:
        raise InvalidArgumentError("n_list and seeds must be non-empty")
    spec = spec or tabular_mixture_spec(mdp)
    jobs = [(fle_error, (mdp, policy, spec, int(n), int(seed), optimizer, rho)) for n in n_list for seed in seeds]
    results = run_jobs(jobs, workers)
    table = ErrorRateTable()
    for (_, args), error in zip(jobs, results):
        table.errors.setdefault(args[3], []).append(error)
    return table
