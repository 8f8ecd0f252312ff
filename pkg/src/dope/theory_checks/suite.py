# The theory suite: every property check on small exact instances, written to theory_report.csv

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from ..baselines.fqe import FqeConfig, fqe_finite
from ..density_models.base import OptimizerConfig
from ..density_models.features import OneHotStateCells
from ..density_models.mixture import TabularMixtureModel
from ..density_models.point_mass import PointMassModel
from ..density_models.registry import ModelSpec
from ..environments.tabular import (
    four_state_test_mdp,
    generate_tabular_dataset,
    tabular_exact_return_dist,
    three_state_discounted_mdp,
    two_state_discounted_mdp,
    uniform_bins,
)
from ..fle.algorithms import FleFiniteConfig, FleInfiniteConfig, fle_finite, fle_infinite
from ..mdp_core.policy import TabularPolicy
from ..mdp_core.rng import RngStream
from ..mdp_core.rollout import monte_carlo_returns
from ..metrics.bellman import apply_bellman
from ..metrics.checks import CheckResult, check_contraction, check_cvar_lipschitz, check_tv_dominance
from ..metrics.distances import DiscreteLaw, HistogramSpec, mixture_tv, wasserstein1_1d
from .coverage import coverage_constant_tabular
from .sweep import error_rate_sweep, initial_pair_distribution

logger = logging.getLogger(__name__)

REPORT_FILE = "theory_report.csv"
REPORT_COLUMNS = ["check", "lhs", "rhs", "margin", "pass"]


@dataclass(frozen=True)
class TheorySuiteConfig:
    """Sizes of the theory suite; the defaults are the acceptance settings

    .. parameter:: Seed of every generated instance
    .. parameter:: Random (f, f') pairs per contraction setting
    .. parameter:: Samples per pair of the contraction check
    .. parameter:: Failures allowed per contraction setting
    .. parameter:: Random law pairs per dominance order
    .. parameter:: Random law pairs per CVaR level
    .. parameter:: Samples per (h, x, a) of the Bellman fixed-point check
    .. parameter:: Dataset sizes whose median error must not increase
    .. parameter:: (dataset size, TV tolerance) pairs of the oracle-equivalence check
    .. parameter:: Seeds of every FLE sweep
    .. parameter:: Dataset size of the FQE reduction check
    .. parameter:: Dataset size of the discounted checks
    .. parameter:: Iterations T of the discounted check with γ = 0.9
    .. parameter:: Run the FLE-based checks (sweeps, FQE reduction, discounted checks)
    """

    seed: int = 0
    contraction_pairs: int = 100
    contraction_samples: int = 128
    contraction_failures: int = 5
    dominance_pairs: int = 200
    cvar_pairs: int = 100
    bellman_samples: int = 100_000
    sweep_sizes: Tuple[int, ...] = (5_000, 20_000, 80_000)
    oracle_sizes: Tuple[Tuple[int, float], ...] = ((20_000, 0.12), (200_000, 0.05))
    sweep_seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    fqe_samples: int = 20_000
    discounted_samples: int = 200_000
    discounted_iterations: int = 40
    include_fle: bool = True


def _count_row(name: str, results: Sequence[CheckResult], allowed: int) -> CheckResult:
    failures = sum(not r.passed for r in results)
    for r in results:
        if not r.passed:
            logger.info("%s: lhs=%.6g exceeds rhs=%.6g", r.name, r.lhs, r.rhs)
    return CheckResult(name, float(failures), float(allowed), failures <= allowed)


def contraction_suite(config: TheorySuiteConfig) -> List[CheckResult]:
    """Random point-mass (f, f') pairs on the 3-state discounted MDP, p in {1, 2}, γ in {0.5, 0.9}."""
    rows = []
    for gamma in (0.5, 0.9):
        mdp, policy = three_state_discounted_mdp(gamma)
        cells = OneHotStateCells(mdp.n_states)
        for p in (1, 2):
            rng = RngStream(config.seed).derive("contraction", p, str(gamma))
            results = []
            for i in range(config.contraction_pairs):
                pair = rng.derive("pair", i)
                f, f_prime = PointMassModel(cells, mdp.n_actions), PointMassModel(cells, mdp.n_actions)
                shape = f.values.shape
                f.set_parameters({"values": pair.derive("f").uniform(0.0, 1.0 / (1.0 - gamma), size=shape)})
                f_prime.set_parameters({"values": pair.derive("f'").uniform(0.0, 1.0 / (1.0 - gamma), size=shape)})
                results.append(check_contraction(mdp, policy, f, f_prime, p, config.contraction_samples, pair))
            rows.append(_count_row(f"contraction_p{p}_gamma{gamma:g}", results, config.contraction_failures))
    return rows


def random_law(rng: RngStream, atoms: np.ndarray) -> DiscreteLaw:
    return DiscreteLaw(atoms, rng.generator.dirichlet(np.ones(atoms.shape[0])))


def dominance_suite(config: TheorySuiteConfig, n_atoms: int = 8) -> List[CheckResult]:
    """Exact laws on a common 8-atom support in the unit square, p in {1, 2, 3}."""
    rows = []
    for order in (1, 2, 3):
        rng = RngStream(config.seed).derive("dominance", order)
        results = []
        for i in range(config.dominance_pairs):
            pair = rng.derive("pair", i)
            atoms = pair.derive("atoms").uniform(0.0, 1.0, size=(n_atoms, 2))
            diam = float(cdist(atoms, atoms).max())
            p_law, q_law = random_law(pair.derive("p"), atoms), random_law(pair.derive("q"), atoms)
            results.append(check_tv_dominance(p_law, q_law, order, diam))
        rows.append(_count_row(f"tv_dominance_p{order}", results, 0))
    return rows


def cvar_lipschitz_suite(config: TheorySuiteConfig, h_max: float = 1.0, n_atoms: int = 8) -> List[CheckResult]:
    """Exact scalar laws on [0, H_max] with partly shared atoms, τ in {0.1, 0.5, 1}."""
    rows = []
    for tau in (0.1, 0.5, 1.0):
        rng = RngStream(config.seed).derive("cvar", str(tau))
        results = []
        for i in range(config.cvar_pairs):
            pair = rng.derive("pair", i)
            shared = pair.derive("shared").uniform(0.0, h_max, size=n_atoms // 2)
            f_atoms = np.concatenate([shared, pair.derive("f_atoms").uniform(0.0, h_max, size=n_atoms // 2)])
            g_atoms = np.concatenate([shared, pair.derive("g_atoms").uniform(0.0, h_max, size=n_atoms // 2)])
            results.append(
                check_cvar_lipschitz(random_law(pair.derive("f"), f_atoms), random_law(pair.derive("g"), g_atoms), tau, h_max)
            )
        rows.append(_count_row(f"cvar_lipschitz_tau{tau:g}", results, 0))
    return rows


def bellman_fixed_point_check(config: TheorySuiteConfig, tol: float = 0.02) -> List[CheckResult]:
    """TV between the histogram of T^π Z_{h+1} samples and the exact bin masses of Z_h, worst (x, a) per h."""
    mdp, policy = four_state_test_mdp()
    truth = tabular_exact_return_dist(mdp, policy)
    S, A, H = mdp.n_states, mdp.n_actions, mdp.horizon
    cells = OneHotStateCells(S)
    spec = HistogramSpec.uniform(1, 60, -0.1, 1.1)
    edges = np.linspace(-0.1, 1.1, 61)
    edges[0], edges[-1] = -np.inf, np.inf
    bin_mass = np.stack([np.diff(d.cdf(edges)) for d in mdp.rewards])
    rng = RngStream(config.seed).derive("bellman")

    rows = []
    for h in range(1, H + 1):
        if h == H:
            f = PointMassModel(cells, A)
        else:
            f = TabularMixtureModel(cells, A, dictionary=mdp.rewards)
            f.set_weights(truth.weights[h].reshape(S * A, -1))
        worst = 0.0
        for x in range(S):
            for a in range(A):
                image = apply_bellman(f, mdp, policy, mdp.one_hot(x), a, None, config.bellman_samples, rng.derive(h, x, a), step=h)
                exact = truth.at(h, x, a) @ bin_mass
                worst = max(worst, 0.5 * float(np.abs(spec.histogram(image.samples).ravel() - exact).sum()))
        rows.append(CheckResult(f"bellman_fixed_point_h{h}", worst, tol, worst <= tol))
    return rows


def coverage_row(config: TheorySuiteConfig) -> CheckResult:
    """Coverage of the uniform offline distribution on the 4-state test MDP; reported, never failed."""
    mdp, policy = four_state_test_mdp()
    rho = np.full((mdp.n_states, mdp.n_actions), 1.0 / (mdp.n_states * mdp.n_actions))
    estimate = coverage_constant_tabular(mdp, policy, rho)
    return CheckResult("coverage_constant_uniform_rho", estimate.constant, float("inf"), True)


def error_rate_rows(config: TheorySuiteConfig, workers: Optional[int] = None) -> List[CheckResult]:
    mdp, policy = four_state_test_mdp()
    sizes = sorted(set(config.sweep_sizes) | {n for n, _ in config.oracle_sizes})
    table = error_rate_sweep(mdp, policy, None, sizes, config.sweep_seeds, workers=workers)

    rows = []
    for n, tol in config.oracle_sizes:
        within = sum(e <= tol for e in table.errors[n])
        rows.append(CheckResult(f"oracle_equivalence_n{n}", table.median(n), tol, 2 * within > len(table.errors[n])))
    medians = [table.median(n) for n in sorted(config.sweep_sizes)]
    increase = max([b - a for a, b in zip(medians, medians[1:])] + [0.0])
    rows.append(CheckResult("error_non_increasing_in_n", increase, 0.0, increase <= 0.0))
    return rows


def fqe_reduction_check(config: TheorySuiteConfig, tol: float = 1e-6, sigma: float = 1e-6) -> CheckResult:
    """FLE with a fixed (tiny) variance Gaussian against least-squares FQE on the same step subsets.

    Runs under the argmax of the test policy: with a deterministic policy the bootstrapped
    targets carry no action-sampling noise, so the two fitted means agree up to `sigma`.
    The row name records both choices.
    """
    mdp, stochastic = four_state_test_mdp()
    policy = TabularPolicy(np.eye(mdp.n_actions)[np.argmax(stochastic.table, axis=1)])
    rng = RngStream(config.seed).derive("fqe")
    rho = np.full((mdp.n_states, mdp.n_actions), 1.0 / (mdp.n_states * mdp.n_actions))
    data = generate_tabular_dataset(mdp, rho, config.fqe_samples, rng.derive("data"))
    cells = OneHotStateCells(mdp.n_states)

    spec = ModelSpec("fixed_gaussian", cells, mdp.n_actions, options={"sigma": sigma})
    estimator = fle_finite(data, FleFiniteConfig(mdp.horizon, spec, policy, seed=config.seed))
    fqe = fqe_finite(data, FqeConfig(mdp.horizon, cells, mdp.n_actions, policy))
    gap = max(float(np.abs(estimator.model(h).mean - fqe.q[h]).max()) for h in range(1, mdp.horizon + 1))
    return CheckResult(f"fqe_reduction_argmax_policy_sigma{sigma:g}", gap, tol, gap <= tol)


def discounted_checks(config: TheorySuiteConfig) -> List[CheckResult]:
    """Discounted FLE with histogram mixtures: W1 to the truncated-rollout oracle at γ = 0.9, exact TV at γ = 0."""
    rows = []
    optimizer = OptimizerConfig(lr=5e-2, iterations=500)
    rng = RngStream(config.seed).derive("discounted")

    gamma = 0.9
    mdp, policy = two_state_discounted_mdp(gamma)
    cells = OneHotStateCells(mdp.n_states)
    rho = np.full((mdp.n_states, mdp.n_actions), 1.0 / (mdp.n_states * mdp.n_actions))
    data = generate_tabular_dataset(mdp, rho, config.discounted_samples, rng.derive("data", "0.9"))
    spec = ModelSpec("tabular_mixture", cells, mdp.n_actions, options={"dictionary": uniform_bins(0.0, 1.0 / (1.0 - gamma), 50)})
    config_09 = FleInfiniteConfig(
        gamma, spec, policy, iterations=config.discounted_iterations, optimizer=optimizer, seed=config.seed, initial_sampler=mdp.sample_initial
    )
    estimate = fle_infinite(data, config_09).sample(20_000, rng.derive("estimate"))
    oracle = monte_carlo_returns(mdp, policy, 20_000, rng.derive("oracle"))
    w1 = wasserstein1_1d(estimate, oracle)
    rows.append(CheckResult("fle_infinite_w1_gamma0.9", w1, 0.05 / (1.0 - gamma), w1 <= 0.05 / (1.0 - gamma)))

    mdp, policy = two_state_discounted_mdp(0.0)
    data = generate_tabular_dataset(mdp, rho, max(config.discounted_samples // 10, 1000), rng.derive("data", "0"))
    bins = uniform_bins(0.0, 1.0, 20)
    spec = ModelSpec("tabular_mixture", cells, mdp.n_actions, options={"dictionary": bins})
    head = fle_infinite(data, FleInfiniteConfig(0.0, spec, policy, optimizer=optimizer, seed=config.seed)).head
    q = initial_pair_distribution(mdp, policy)
    keys = head.keys(np.eye(mdp.n_states).repeat(mdp.n_actions, axis=0), np.tile(np.arange(mdp.n_actions), mdp.n_states))
    fitted = q.ravel() @ head.weights[keys]
    tv = mixture_tv(
        np.concatenate([q.ravel(), np.zeros(len(bins))]),
        np.concatenate([np.zeros(len(mdp.rewards)), fitted]),
        list(mdp.rewards) + bins,
    )
    rows.append(CheckResult("fle_infinite_tv_gamma0", tv, 0.03, tv <= 0.03))
    return rows


def run_theory_suite(config: TheorySuiteConfig = TheorySuiteConfig(), workers: Optional[int] = None) -> List[CheckResult]:
    rows = contraction_suite(config) + dominance_suite(config) + cvar_lipschitz_suite(config)
    rows += bellman_fixed_point_check(config)
    rows.append(coverage_row(config))
    if config.include_fle:
        rows += error_rate_rows(config, workers)
        rows.append(fqe_reduction_check(config))
        rows += discounted_checks(config)
    failed = [r.name for r in rows if not r.passed]
    if failed:
        logger.warning("Theory checks failed: %s", ", ".join(failed))
    else:
        logger.info("All %d theory checks passed", len(rows))
    return rows


def write_theory_report(rows: Sequence[CheckResult], path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.is_dir() or not path.suffix:
        path = path / REPORT_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            content = row.to_row()
            writer.writerow({k: "{:.17g}".format(v) if isinstance(v, float) else v for k, v in content.items()})
    logger.info("Wrote %s", path)
    return path
