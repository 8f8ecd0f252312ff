import pickle
import tempfile
import unittest
from pathlib import Path

import numpy as np

from dope.environments import four_state_test_mdp, state_action_distributions, tabular_exact_return_dist
from dope.errors import InvalidArgumentError, ValidationError
from dope.mdp_core import (
    DatasetMeta,
    EmpiricalDistribution,
    EpsilonGreedyPolicy,
    OfflineDataset,
    RngStream,
    TabularPolicy,
    TransitionTuple,
    monte_carlo_returns,
    policy_from_dict,
    read_dataset_csv,
    split_by_step,
    split_dataset,
    step_subsets,
    truncation_length,
    write_dataset_csv,
)

META = DatasetMeta(env_id="toy", reward_dim=1, obs_dim=2, n_actions=2, horizon=2)


def toy_dataset(n: int = 10) -> OfflineDataset:
    rng = RngStream(3)
    return OfflineDataset.from_arrays(
        x=rng.normal(size=(n, 2)),
        a=np.arange(n) % 2,
        r=rng.normal(size=n),
        x_next=rng.normal(size=(n, 2)),
        meta=META,
        step=np.arange(n) % 2 + 1,
    )


class TestRngStream(unittest.TestCase):
    def test_same_labels_same_draws(self):
        a = RngStream(7).derive("fit", 3).normal(size=5)
        b = RngStream(7).derive("fit", 3).normal(size=5)
        np.testing.assert_array_equal(a, b)

    def test_labels_do_not_depend_on_draw_order(self):
        root = RngStream(7)
        root.derive("other").normal(size=100)
        np.testing.assert_array_equal(root.derive("fit").random(3), RngStream(7).derive("fit").random(3))

    def test_different_labels_differ(self):
        self.assertFalse(np.array_equal(RngStream(7).derive("a").random(4), RngStream(7).derive("b").random(4)))

    def test_categorical_rows(self):
        probs = np.array([[1.0, 0.0], [0.0, 1.0]] * 50)
        np.testing.assert_array_equal(RngStream(0).categorical(probs), np.array([0, 1] * 50))


class TestOfflineDataset(unittest.TestCase):
    def test_from_tuples(self):
        tuples = [TransitionTuple(np.zeros(2), 1, np.array([0.5]), np.ones(2), step=1)]
        ds = OfflineDataset.from_tuples(tuples, META)
        self.assertEqual(len(ds), 1)
        self.assertEqual(ds[0].a, 1)
        self.assertEqual(ds[0].step, 1)

    def test_rejects_bad_action(self):
        with self.assertRaises(ValidationError):
            OfflineDataset.from_arrays(np.zeros((1, 2)), [2], [0.0], np.zeros((1, 2)), META)

    def test_rejects_non_finite_reward(self):
        with self.assertRaises(ValidationError):
            OfflineDataset.from_arrays(np.zeros((1, 2)), [0], [np.nan], np.zeros((1, 2)), META)

    def test_rejects_empty(self):
        with self.assertRaises(InvalidArgumentError):
            OfflineDataset.from_tuples([], META)

    def test_content_hash_tracks_content(self):
        ds = toy_dataset()
        self.assertEqual(ds.subset([0, 1]).content_hash(), toy_dataset().subset([0, 1]).content_hash())
        self.assertNotEqual(ds.subset([0, 1]).content_hash(), ds.subset([1, 2]).content_hash())


class TestSplits(unittest.TestCase):
    def test_random_split_is_an_even_partition(self):
        ds = toy_dataset(11)
        parts = split_dataset(ds, 3, RngStream(0))
        self.assertEqual(sorted(len(p) for p in parts), [3, 4, 4])
        union = np.concatenate([p.indices for p in parts])
        np.testing.assert_array_equal(np.sort(union), np.arange(11))

    def test_random_split_rejects_k_above_n(self):
        with self.assertRaises(InvalidArgumentError):
            split_dataset(toy_dataset(2), 3, RngStream(0))

    def test_split_by_step(self):
        parts = split_by_step(toy_dataset(10), 2)
        self.assertTrue((parts[0].step == 1).all())
        self.assertTrue((parts[1].step == 2).all())

    def test_split_by_step_needs_every_step(self):
        with self.assertRaises(InvalidArgumentError):
            split_by_step(toy_dataset(10), 3)

    def test_step_subsets_modes(self):
        ds = toy_dataset(10)
        self.assertEqual([len(p) for p in step_subsets(ds, 2, "stratified", RngStream(0))], [5, 5])
        self.assertEqual(sum(len(p) for p in step_subsets(ds, 2, "random", RngStream(0))), 10)
        with self.assertRaises(InvalidArgumentError):
            step_subsets(ds, 2, "interleaved", RngStream(0))


class TestDatasetCsv(unittest.TestCase):
    def test_write_and_read_back(self):
        ds = toy_dataset()
        with tempfile.TemporaryDirectory() as tmp:
            path = write_dataset_csv(ds, Path(tmp) / "d.csv", extra_manifest={"seed": 3})
            back = read_dataset_csv(path)
        np.testing.assert_array_equal(back.x, ds.x)
        np.testing.assert_array_equal(back.r, ds.r)
        np.testing.assert_array_equal(back.step, ds.step)
        self.assertEqual(back.meta, META)

    def test_same_dataset_same_bytes(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = write_dataset_csv(toy_dataset(), Path(tmp) / "a.csv").read_bytes()
            b = write_dataset_csv(toy_dataset(), Path(tmp) / "b.csv").read_bytes()
        self.assertEqual(a, b)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_dataset_csv("does/not/exist.csv")


class TestPolicies(unittest.TestCase):
    def test_epsilon_greedy(self):
        policy = EpsilonGreedyPolicy(2, 0, 1.0 / 7.0)
        np.testing.assert_allclose(policy.probs(np.zeros((1, 3)))[0], [13 / 14, 1 / 14])
        self.assertAlmostEqual(policy.greedy_probability, 13 / 14)

    def test_tabular_rows_must_sum_to_one(self):
        with self.assertRaises(ValidationError):
            TabularPolicy(np.array([[0.5, 0.6]]))

    def test_tabular_policy_pickles(self):
        policy = TabularPolicy(np.array([[0.2, 0.8], [1.0, 0.0]]))
        back = pickle.loads(pickle.dumps(policy))
        np.testing.assert_array_equal(back.probs(np.eye(2)), policy.probs(np.eye(2)))

    def test_from_dict(self):
        policy = EpsilonGreedyPolicy(3, 1, 0.3)
        back = policy_from_dict(policy.to_dict())
        np.testing.assert_allclose(back.probs(np.zeros((1, 1))), policy.probs(np.zeros((1, 1))))
        with self.assertRaises(InvalidArgumentError):
            policy_from_dict({"kind": "softmax"})


class TestRollouts(unittest.TestCase):
    def test_truncation_length(self):
        self.assertEqual(truncation_length(0.0, 1), 1)
        L = truncation_length(0.9, 1, tol=1e-3)
        self.assertLessEqual(0.9**L / 0.1, 1e-3)
        self.assertGreater(0.9 ** (L - 1) / 0.1, 1e-3)

    def test_monte_carlo_mean_matches_dp(self):
        mdp, policy = four_state_test_mdp()
        oracle = tabular_exact_return_dist(mdp, policy)
        w = oracle.marginal(1, state_action_distributions(mdp, policy)[0])
        exact_mean = float(w @ np.array([r.mean for r in mdp.rewards]))
        z = monte_carlo_returns(mdp, policy, 20_000, RngStream(1))
        self.assertIsInstance(z, EmpiricalDistribution)
        self.assertAlmostEqual(float(z.mean()[0]), exact_mean, delta=0.01)
