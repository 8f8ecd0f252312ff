import tempfile
import unittest
from pathlib import Path

import numpy as np

from dope.density_models import CombinationLockCells, ModelSpec, OneHotStateCells, PointMassModel
from dope.environments import GOOD, CombinationLock, generate_offline_dataset, generate_tabular_dataset
from dope.environments import three_state_discounted_mdp
from dope.errors import InvalidArgumentError, MissingModelsError, TrainingAbortedError
from dope.fle import (
    FleFiniteConfig,
    FleInfiniteConfig,
    ReturnEstimator,
    build_targets_finite,
    default_iterations,
    estimator_sample,
    fle_finite,
    fle_infinite,
    load_run_models,
    read_run_manifest,
)
from dope.mdp_core import FixedActionPolicy, RngStream, split_by_step

GREEDY = 13 / 14


class TestFleFinite(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.env = CombinationLock(horizon=3)
        cls.policy = cls.env.test_policy()
        cls.dataset = generate_offline_dataset(cls.env, per_cell=2000, rng=RngStream(0))
        cls.spec = ModelSpec(
            family="fixed_gaussian", feature_map=CombinationLockCells(3), n_actions=2, options={"sigma": 0.05}
        )

    def config(self, **kwargs) -> FleFiniteConfig:
        return FleFiniteConfig(
            horizon=3, model=self.spec, policy=self.policy, seed=1, initial_sampler=self.env.sample_initial, **kwargs
        )

    def test_conditional_mean(self):
        est = fle_finite(self.dataset, self.config())
        x = self.env.observe(np.full(5000, GOOD), 1, RngStream(2))
        z = est.conditional_sample(1, x, np.zeros(5000, dtype=int), RngStream(3)).scalar()
        # Stays on the good chain with the greedy probability of the single free step
        self.assertAlmostEqual(float(z.mean()), GREEDY - (1 - GREEDY), delta=0.06)

    def test_initial_state_estimate(self):
        est = fle_finite(self.dataset, self.config())
        z = est.sample(20_000, RngStream(4)).scalar()
        expected = GREEDY * (2 * GREEDY - 1) - (1 - GREEDY)
        self.assertAlmostEqual(float(z.mean()), expected, delta=0.06)

    def test_estimator_sample_is_seeded(self):
        est = fle_finite(self.dataset, self.config())
        a = estimator_sample(est, 100, RngStream(5)).scalar()
        b = estimator_sample(est, 100, RngStream(5)).scalar()
        np.testing.assert_array_equal(a, b)
        self.assertEqual(a.shape, (100,))

    def test_consumed_subsets(self):
        manifest = fle_finite(self.dataset, self.config()).manifest
        self.assertEqual(len(set(manifest["subset_hashes"].values())), 3)
        self.assertEqual([len(manifest["consumed"][str(h)]) for h in (1, 2, 3)], [3, 2, 1])
        self.assertEqual(manifest["consumed"]["3"], [manifest["subset_hashes"]["3"]])

    def test_same_seed_same_models(self):
        a = fle_finite(self.dataset, self.config())
        b = fle_finite(self.dataset, self.config())
        np.testing.assert_array_equal(a.model(1).mean, b.model(1).mean)

    def test_artifacts(self):
        with tempfile.TemporaryDirectory() as tmp:
            fle_finite(self.dataset, self.config(artifact_dir=Path(tmp), dump_targets=True))
            self.assertTrue((Path(tmp) / "targets_1.csv").is_file())
            self.assertEqual(read_run_manifest(tmp)["algorithm"], "fle-finite")
            self.assertEqual(sorted(load_run_models(tmp)), [1, 2, 3])
            with self.assertRaises(MissingModelsError):
                load_run_models(tmp, [4])

    def test_missing_step(self):
        est = fle_finite(self.dataset, self.config())
        with self.assertRaises(MissingModelsError):
            est.model(7)

    def test_config_validation(self):
        with self.assertRaises(InvalidArgumentError):
            FleFiniteConfig(horizon=0, model=self.spec, policy=self.policy)
        with self.assertRaises(InvalidArgumentError):
            FleFiniteConfig(horizon=3, model=[self.spec], policy=self.policy)
        with self.assertRaises(InvalidArgumentError):
            FleFiniteConfig(horizon=3, model=self.spec, policy=self.policy, split="interleaved")

    def test_last_step_takes_no_next_model(self):
        subset = split_by_step(self.dataset, 3)[2]
        with self.assertRaises(InvalidArgumentError):
            build_targets_finite(subset, 3, PointMassModel.constant(0.0, 2), self.policy, RngStream(0), 3)

    def test_non_finite_bootstrap_aborts(self):
        subset = split_by_step(self.dataset, 3)[0]
        broken = PointMassModel(CombinationLockCells(3), 2)
        broken.values[:] = np.nan
        with self.assertRaises(TrainingAbortedError) as ctx:
            build_targets_finite(subset, 1, broken, self.policy, RngStream(0), 3)
        self.assertEqual(ctx.exception.step, 1)
        self.assertEqual(ctx.exception.tuple_index, int(subset.indices[0]))


class TestFleInfinite(unittest.TestCase):
    def test_default_iterations(self):
        self.assertEqual(default_iterations(10_000, 0.9), 44)
        self.assertEqual(default_iterations(100, 0.0), 1)

    def test_gamma_range(self):
        mdp, policy = three_state_discounted_mdp()
        spec = ModelSpec(family="fixed_gaussian", feature_map=OneHotStateCells(3), n_actions=2)
        with self.assertRaises(InvalidArgumentError):
            FleInfiniteConfig(gamma=1.0, model=spec, policy=policy)

    def test_fixed_point_mean(self):
        gamma = 0.5
        mdp, policy = three_state_discounted_mdp(gamma)
        dataset = generate_tabular_dataset(mdp, np.full((3, 2), 1 / 6), 20_000, RngStream(0))
        spec = ModelSpec(family="fixed_gaussian", feature_map=OneHotStateCells(3), n_actions=2, options={"sigma": 0.01})
        est = fle_infinite(dataset, FleInfiniteConfig(gamma=gamma, model=spec, policy=policy, seed=2))
        self.assertEqual(est.manifest["iterations"], default_iterations(20_000, gamma))

        # Q = r + γ P π Q on the (state, action) pairs
        r = np.array([d.mean for d in mdp.rewards])
        transfer = (mdp.P[:, :, :, None] * policy.table[None, None, :, :]).reshape(6, 6)
        q = np.linalg.solve(np.eye(6) - gamma * transfer, r)
        np.testing.assert_allclose(est.head.mean[:, 0], q, atol=0.03)

    def test_single_iteration_fits_reward(self):
        mdp, policy = three_state_discounted_mdp(0.5)
        dataset = generate_tabular_dataset(mdp, np.full((3, 2), 1 / 6), 6000, RngStream(0))
        spec = ModelSpec(family="fixed_gaussian", feature_map=OneHotStateCells(3), n_actions=2, options={"sigma": 0.01})
        est = fle_infinite(dataset, FleInfiniteConfig(gamma=0.5, model=spec, policy=policy, iterations=1, seed=2))
        self.assertEqual(sorted(est.models), [1])
        # f̂_0 is a point mass at zero, so the only target is r
        r = np.array([d.mean for d in mdp.rewards])
        np.testing.assert_allclose(est.head.mean[:, 0], r, atol=0.01)

    def test_zero_discount(self):
        mdp, policy = three_state_discounted_mdp(0.0)
        dataset = generate_tabular_dataset(mdp, np.full((3, 2), 1 / 6), 6000, RngStream(0))
        spec = ModelSpec(family="fixed_gaussian", feature_map=OneHotStateCells(3), n_actions=2, options={"sigma": 0.01})
        est = fle_infinite(dataset, FleInfiniteConfig(gamma=0.0, model=spec, policy=policy, seed=2))
        self.assertEqual(est.manifest["iterations"], 1)
        r = np.array([d.mean for d in mdp.rewards])
        np.testing.assert_allclose(est.head.mean[:, 0], r, atol=0.01)


class TestFleSingleStep(unittest.TestCase):
    def test_one_step_lock(self):
        env = CombinationLock(horizon=1)
        dataset = generate_offline_dataset(env, per_cell=2000, rng=RngStream(0))
        spec = ModelSpec(
            family="fixed_gaussian", feature_map=CombinationLockCells(1), n_actions=2, options={"sigma": 0.05}
        )
        config = FleFiniteConfig(
            horizon=1, model=spec, policy=env.test_policy(), seed=1, initial_sampler=env.sample_initial
        )
        est = fle_finite(dataset, config)
        self.assertEqual(sorted(est.models), [1])
        self.assertEqual(est.manifest["consumed"], {"1": [est.manifest["subset_hashes"]["1"]]})
        # Starts on the good chain and is paid at once
        z = est.sample(10_000, RngStream(4)).scalar()
        self.assertAlmostEqual(float(z.mean()), 1.0, delta=0.02)


class TestReturnEstimatorSample(unittest.TestCase):
    def test_mixture_of_point_masses(self):
        model = PointMassModel(OneHotStateCells(2), 1)
        model.values[:, 0] = [0.0, 1.0]

        def initial(m: int, rng: RngStream) -> np.ndarray:
            return np.eye(2)[(rng.random(m) < 0.7).astype(int)]

        est = ReturnEstimator({1: model}, FixedActionPolicy(1, 0), initial)
        z = estimator_sample(est, 10_000, RngStream(6)).scalar()
        self.assertEqual(set(np.unique(z)), {0.0, 1.0})
        self.assertAlmostEqual(float(z.mean()), 0.7, delta=0.02)
