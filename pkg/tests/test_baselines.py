import unittest

import numpy as np

from dope.baselines import (
    CategoricalTdConfig,
    FqeConfig,
    QuantileTdConfig,
    QuantileTdModel,
    categorical_td_run,
    fqe_finite,
    least_squares_q,
    quantile_huber,
    quantile_midpoints,
    quantile_td_run,
)
from dope.density_models import CombinationLockCells, ConstantCells, ModelRegistry, OptimizerConfig
from dope.environments import GOOD, CombinationLock, generate_offline_dataset
from dope.errors import InvalidArgumentError, UnsupportedDimensionError
from dope.mdp_core import RngStream

GREEDY = 13 / 14


def small_lock(reward_mode: str = "scalar-gaussian"):
    env = CombinationLock(horizon=3, reward_mode=reward_mode)
    return env, generate_offline_dataset(env, per_cell=2000, rng=RngStream(0))


class TestQuantileLoss(unittest.TestCase):
    def test_midpoints(self):
        np.testing.assert_allclose(quantile_midpoints(4), [0.125, 0.375, 0.625, 0.875])

    def test_huber_branches(self):
        loss, slope = quantile_huber(np.array([[-2.0, 0.5]]), np.array([0.25, 0.75]), kappa=1.0)
        np.testing.assert_allclose(loss, [[1.125, 0.09375]])
        np.testing.assert_allclose(slope, [[-0.75, 0.375]])


class TestQuantileTdModel(unittest.TestCase):
    def test_registered(self):
        self.assertIs(ModelRegistry.get_model_type("quantile"), QuantileTdModel)

    def test_scalar_only(self):
        with self.assertRaises(UnsupportedDimensionError):
            QuantileTdModel(ConstantCells(), 1, dim=2)

    def test_needs_two_quantiles(self):
        with self.assertRaises(InvalidArgumentError):
            QuantileTdModel(ConstantCells(), 1, n_quantiles=1)

    def test_fit_recovers_uniform_quantiles(self):
        z = RngStream(0).uniform(0.0, 1.0, size=2000)
        model = QuantileTdModel(ConstantCells(), 1, n_quantiles=4, kappa=0.01)
        model.fit(np.zeros((2000, 1)), np.zeros(2000), z, OptimizerConfig(lr=0.01, iterations=1000), RngStream(0))
        np.testing.assert_allclose(model.quantiles[0], quantile_midpoints(4), atol=0.05)

    def test_density_is_zero_outside_quantiles(self):
        model = QuantileTdModel(ConstantCells(), 1, n_quantiles=2)
        model.set_parameters({"locations": np.array([[0.0, 1.0]])})
        ld = model.log_density(np.zeros((2, 1)), [0, 0], np.array([0.5, 2.0]))
        self.assertAlmostEqual(float(ld[0]), np.log(0.5))
        self.assertLess(float(ld[1]), -29.0)


class TestQuantileTd(unittest.TestCase):
    def test_rejects_vector_rewards(self):
        env, dataset = small_lock("ring-2d")
        config = QuantileTdConfig(horizon=3, feature_map=CombinationLockCells(3), n_actions=2)
        with self.assertRaises(UnsupportedDimensionError):
            quantile_td_run(dataset, dataset.meta, env.test_policy(), config)

    def test_runs_backwards(self):
        env, dataset = small_lock()
        config = QuantileTdConfig(
            horizon=3,
            feature_map=CombinationLockCells(3),
            n_actions=2,
            n_quantiles=10,
            optimizer=OptimizerConfig(lr=0.1, iterations=50),
        )
        est = quantile_td_run(dataset, dataset.meta, env.test_policy(), config)
        self.assertEqual(sorted(est.models), [1, 2, 3])
        self.assertEqual(est.manifest["algorithm"], "quantile-td")


class TestCategoricalTd(unittest.TestCase):
    def test_good_chain_mass(self):
        env, dataset = small_lock()
        config = CategoricalTdConfig(
            horizon=3,
            feature_map=CombinationLockCells(3),
            n_actions=2,
            n_atoms=61,
            optimizer=OptimizerConfig(lr=0.1, iterations=500),
        )
        est = categorical_td_run(dataset, dataset.meta, env.test_policy(), config)
        model = est.model(1)
        positive = model.grid.support()[:, 0] > 0
        key = int(model.keys(env.observe(GOOD, 1, RngStream(0)), [0])[0])
        self.assertAlmostEqual(float(model.probs[key, positive].sum()), GREEDY, delta=0.05)

    def test_two_dimensional_grid(self):
        env, dataset = small_lock("ring-2d")
        config = CategoricalTdConfig(
            horizon=3,
            feature_map=CombinationLockCells(3),
            n_actions=2,
            low=-4.0,
            high=4.0,
            n_atoms=9,
            optimizer=OptimizerConfig(lr=0.1, iterations=20),
        )
        est = categorical_td_run(dataset, dataset.meta, env.test_policy(), config)
        self.assertEqual(est.model(1).grid.size, 81)
        np.testing.assert_allclose(est.model(1).probs.sum(axis=1), 1.0)


class TestFqe(unittest.TestCase):
    def test_least_squares_is_key_average(self):
        q = least_squares_q(np.array([0, 0, 2]), np.array([[1.0], [3.0], [5.0]]), 4)
        np.testing.assert_allclose(q, [[2.0], [0.0], [5.0], [0.0]], atol=1e-12)

    def test_good_chain_value(self):
        env, dataset = small_lock()
        policy = env.test_policy()
        result = fqe_finite(dataset, FqeConfig(horizon=3, feature_map=CombinationLockCells(3), n_actions=2, policy=policy))
        x = env.observe(GOOD, 1, RngStream(0))
        self.assertAlmostEqual(float(result.value(1, x, [0])[0, 0]), 2 * GREEDY - 1, delta=0.05)
