import unittest

import numpy as np

from dope.environments import (
    BAD,
    GOOD,
    CombinationLock,
    LqrSystem,
    RewardDensity,
    TabularMDP,
    comb_lock_transition,
    discounted_occupancy,
    dlqr_gain,
    four_state_test_mdp,
    generate_offline_dataset,
    generate_tabular_dataset,
    lqr_return_params,
    lqr_rollout_returns,
    state_action_distributions,
    tabular_exact_return_dist,
    three_state_discounted_mdp,
    uniform_bins,
)
from dope.errors import ConfigurationError, ValidationError
from dope.mdp_core import RngStream, monte_carlo_returns


class TestCombinationLock(unittest.TestCase):
    def setUp(self):
        self.env = CombinationLock(horizon=20, reward_mode="scalar-gaussian")
        self.policy = self.env.test_policy()

    def test_horizon_must_fit_observation(self):
        with self.assertRaises(ConfigurationError):
            CombinationLock(horizon=29, obs_dim=30)

    def test_unknown_reward_mode(self):
        with self.assertRaises(ConfigurationError):
            CombinationLock(reward_mode="ring-3d")

    def test_observation_decodes(self):
        x = self.env.observe(np.array([GOOD, BAD]), np.array([3, 20]), RngStream(0))
        self.assertEqual(x.shape, (2, 30))
        np.testing.assert_array_equal(self.env.latent_of(x), [GOOD, BAD])
        np.testing.assert_array_equal(self.env.step_of(x), [3, 20])

    def test_transition(self):
        w = comb_lock_transition(np.array([GOOD, GOOD, BAD]), 1, np.array([0, 1, 0]), optimal_action=0)
        np.testing.assert_array_equal(w, [GOOD, BAD, BAD])

    def test_one_sample_per_cell(self):
        ds = generate_offline_dataset(self.env, per_cell=1, rng=RngStream(0))
        self.assertEqual(len(ds), 2 * self.env.horizon)
        self.assertEqual(sorted(set(ds.step.tolist())), list(range(1, 21)))

    def test_rewards_only_at_last_step(self):
        ds = generate_offline_dataset(self.env, per_cell=5, rng=RngStream(0))
        self.assertTrue((ds.r[ds.step < 20] == 0).all())
        self.assertTrue((ds.r[ds.step == 20] != 0).all())

    def test_good_chain_probability(self):
        self.assertEqual(self.env.good_chain_probability(20, self.policy), 1.0)
        self.assertAlmostEqual(self.env.good_chain_probability(1, self.policy), (13 / 14) ** 18)

    def test_conditional_returns_match_dp(self):
        z = self.env.conditional_returns(1, self.policy, 20_000, RngStream(4)).scalar()
        self.assertAlmostEqual(float((z > 0).mean()), self.env.good_chain_probability(1, self.policy), delta=0.01)

    def test_ring_rewards(self):
        env = CombinationLock(horizon=10, reward_mode="ring-2d")
        z = env.conditional_returns(10, env.test_policy(), 1000, RngStream(0)).samples
        self.assertEqual(z.shape, (1000, 2))
        self.assertTrue((np.linalg.norm(z, axis=1) >= 2.0).all())

    def test_noise_block_scale(self):
        env = CombinationLock(horizon=3)
        x = env.observe(np.full(4000, GOOD), 3, RngStream(9))
        noise = x[:, 2 + env.horizon :]
        self.assertEqual(noise.shape, (4000, env.noise_dim))
        self.assertAlmostEqual(float(noise.std()), env.noise_std, delta=0.1 * env.noise_std)
        self.assertAlmostEqual(float(noise.mean()), 0.0, delta=0.01)
        np.testing.assert_array_equal(env.observe(GOOD, 3, RngStream(9), noise=False)[0, 2 + env.horizon :], 0.0)


class TestTabular(unittest.TestCase):
    def test_rejects_bad_transition_rows(self):
        P = np.full((2, 1, 2), 0.6)
        with self.assertRaises(ValidationError):
            TabularMDP(P=P, rewards=(RewardDensity.uniform(0, 1),) * 2, mu=np.array([1.0, 0.0]), horizon=2)

    def test_needs_horizon_or_gamma(self):
        P = np.full((2, 1, 2), 0.5)
        with self.assertRaises(ValidationError):
            TabularMDP(P=P, rewards=(RewardDensity.uniform(0, 1),) * 2, mu=np.array([1.0, 0.0]))

    def test_exact_weights_are_distributions(self):
        mdp, policy = four_state_test_mdp()
        oracle = tabular_exact_return_dist(mdp, policy)
        self.assertEqual(oracle.weights.shape, (3, 4, 2, 8))
        np.testing.assert_allclose(oracle.weights.sum(axis=-1), 1.0)
        # At the last step Z_H(x, a) is the reward density of (x, a) itself
        np.testing.assert_array_equal(oracle.at(3, 2, 1), np.eye(8)[5])

    def test_state_action_distributions(self):
        mdp, policy = four_state_test_mdp()
        d = state_action_distributions(mdp, policy)
        np.testing.assert_allclose(d.sum(axis=(1, 2)), 1.0)
        np.testing.assert_allclose(d[0], mdp.mu[:, None] * policy.table)

    def test_discounted_occupancy(self):
        mdp, policy = three_state_discounted_mdp(0.9)
        d = discounted_occupancy(mdp, policy)
        self.assertAlmostEqual(float(d.sum()), 1.0, places=9)
        self.assertTrue((d >= 0).all())

    def test_generated_dataset(self):
        mdp, _ = four_state_test_mdp()
        rho = np.full((4, 2), 1 / 8)
        ds = generate_tabular_dataset(mdp, rho, 301, RngStream(0))
        self.assertEqual(len(ds), 301)
        self.assertEqual(np.bincount(ds.step).tolist(), [0, 101, 100, 100])

    def test_reward_density(self):
        self.assertAlmostEqual(float(RewardDensity.uniform(0.0, 2.0).cdf(0.5)), 0.25)
        self.assertAlmostEqual(float(RewardDensity.gaussian(1.0, 0.5).cdf(1.0)), 0.5)
        with self.assertRaises(ValidationError):
            RewardDensity.uniform(1.0, 1.0)

    def test_uniform_bins(self):
        bins = uniform_bins(0.0, 1.0, 4)
        self.assertEqual([b.support for b in bins], [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)])

    def test_monte_carlo_component_frequencies(self):
        mdp, policy = four_state_test_mdp()
        z = monte_carlo_returns(mdp, policy, 200_000, RngStream(8)).scalar()
        # Component j's terminal reward falls in [0.12 j, 0.12 (j + 1)); the last one in [0.9, 1]
        component = np.clip(np.floor(z / 0.12), 0, 7).astype(int)
        frequencies = np.bincount(component, minlength=8) / z.shape[0]
        oracle = tabular_exact_return_dist(mdp, policy)
        expected = oracle.marginal(1, state_action_distributions(mdp, policy)[0])
        np.testing.assert_allclose(frequencies, expected, atol=0.01)


class TestLqr(unittest.TestCase):
    def setUp(self):
        A, B, Q, R = 0.9, 1.0, 1.0, 0.1
        self.system = LqrSystem(A=A, B=B, Q=Q, R=R, K=dlqr_gain(A, B, Q, R), sigma=0.1, horizon=5)

    def test_gain_stabilises(self):
        self.assertLess(np.abs(np.linalg.eigvals(self.system.closed_loop())).max(), 1.0)

    def test_rollouts_match_closed_form(self):
        mean, variance = lqr_return_params(self.system, np.array([1.0]), np.array([0.2]), 2)
        z = lqr_rollout_returns(self.system, np.array([1.0]), np.array([0.2]), 2, 20_000, RngStream(0)).scalar()
        self.assertAlmostEqual(float(z.mean()), mean, delta=0.01)
        self.assertAlmostEqual(float(z.var()), variance, delta=0.05 * variance)

    def test_mean_satisfies_bellman_recursion(self):
        A = np.array([[0.9, 0.2], [0.0, 0.8]])
        B = np.array([[0.0], [1.0]])
        Q, R = np.eye(2), np.array([[0.1]])
        system = LqrSystem(A=A, B=B, Q=Q, R=R, K=dlqr_gain(A, B, Q, R), sigma=0.2, horizon=6)
        rng = RngStream(7)
        for h in range(1, system.horizon):
            x, a = rng.normal(size=2), rng.normal(size=1)
            x_next = A @ x + B @ a
            mean, variance = lqr_return_params(system, x, a, h)
            next_mean, next_variance = lqr_return_params(system, x_next, system.K @ x_next, h + 1)
            self.assertAlmostEqual(mean, -(x @ Q @ x) - a @ R @ a + next_mean, delta=1e-8)
            self.assertAlmostEqual(variance, next_variance + system.sigma**2, delta=1e-12)

    def test_static_system(self):
        system = LqrSystem(
            A=np.zeros((2, 2)), B=np.zeros((2, 1)), Q=np.eye(2), R=np.eye(1), K=np.zeros((1, 2)), sigma=0.3, horizon=4
        )
        x, a = np.array([1.0, -2.0]), np.array([0.5])
        for h in range(1, 5):
            mean, variance = lqr_return_params(system, x, a, h)
            self.assertAlmostEqual(mean, -(5.0 + 0.25))
            self.assertAlmostEqual(variance, (4 - h + 1) * 0.09)

    def test_last_step_pays_one_reward(self):
        x, a = np.array([1.5]), np.array([-0.4])
        mean, variance = lqr_return_params(self.system, x, a, self.system.horizon)
        self.assertAlmostEqual(mean, -(1.5**2) - 0.1 * 0.4**2)
        self.assertAlmostEqual(variance, 0.1**2)
