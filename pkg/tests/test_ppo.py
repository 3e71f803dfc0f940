"""
Tests for the actor-critic network and PPO updates.
"""

import numpy as np
import pytest

from glassflow.agent import (
    AdamOptimizer, DimensionMismatchError, Minibatch, RolloutBuffer, clipped_objective,
    collect_rollout, compute_gae, forward, gradient_check, greedy_action, init_params,
    policy_forward, ppo_loss, probability_ratio, sample_action, update, zero_params,
)
from glassflow.agent.ppo import make_optimizer
from glassflow.config import ConfigManager, PpoConfig
from glassflow.env import FabEnv, Transition


def make_env(seed=0, horizon=32):
    config = ConfigManager(apply_env=False)
    config.update_config("process", {"num_process_chambers": 1, "num_arms": 1})
    config.update_config("env", {"observation_mode": "reduced", "rollout_horizon": horizon})
    return FabEnv(config, seed=seed)


def random_minibatch(obs_dim, n_actions, size, rng):
    return Minibatch(
        obs=rng.normal(size=(size, obs_dim)),
        actions=rng.integers(0, n_actions, size=size),
        advantages=rng.normal(size=size),
        returns=rng.normal(size=size),
    )


def brute_force_gae(rewards, values, bootstrap, gamma, lam):
    n = len(rewards)
    next_values = list(values[1:]) + [bootstrap]
    deltas = [rewards[t] + gamma * next_values[t] - values[t] for t in range(n)]
    return np.array([sum((gamma * lam) ** (k - t) * deltas[k] for k in range(t, n))
                     for t in range(n)])


def filled_buffer(seed=0, horizon=32, hidden=8):
    env = make_env(seed, horizon)
    rng = np.random.default_rng(seed)
    params = init_params(env.obs_dim, env.n_actions, hidden, rng)
    buffer = collect_rollout(env, params, horizon, rng)
    buffer.compute(0.99, 0.95)
    return params, buffer


def two_action_params(p0):
    params = zero_params(3, 2, 4)
    params.arrays["actor_b3"] = np.log(np.array([p0, 1.0 - p0]))
    return params


class TestPolicyForward:
    """Tests for policy_forward() and friends."""

    def test_zero_weights_uniform(self):
        """Test uniform probabilities and zero value for zero weights."""
        probs, value = policy_forward(zero_params(6, 4, 8), np.ones(6))
        np.testing.assert_allclose(probs, np.full(4, 0.25))
        assert value == 0.0

    def test_probabilities_normalized(self):
        """Test that probabilities are positive and sum to one."""
        rng = np.random.default_rng(0)
        params = init_params(10, 7, 16, rng)
        for _ in range(20):
            probs, _ = policy_forward(params, rng.normal(size=10))
            assert np.all(probs > 0)
            assert abs(probs.sum() - 1.0) <= 1e-12

    def test_logit_shift_invariance(self):
        """Test that shifting every logit leaves probabilities unchanged."""
        rng = np.random.default_rng(1)
        params = init_params(5, 3, 8, rng)
        obs = rng.normal(size=5)
        before, _ = policy_forward(params, obs)
        params.arrays["actor_b3"] = params.arrays["actor_b3"] + 3.0
        after, _ = policy_forward(params, obs)
        np.testing.assert_allclose(before, after, atol=1e-12)

    def test_shape_mismatch(self):
        """Test that wrong observation widths raise DimensionMismatchError."""
        with pytest.raises(DimensionMismatchError, match="does not match input width"):
            policy_forward(zero_params(6, 4, 8), np.ones(5))

    def test_greedy_ties_go_to_lowest_id(self):
        """Test arg-max tie breaking."""
        assert greedy_action(zero_params(6, 4, 8), np.ones(6)) == 0

    def test_batched_forward(self):
        """Test that batched values match single evaluations."""
        rng = np.random.default_rng(2)
        params = init_params(4, 3, 8, rng)
        obs = rng.normal(size=(5, 4))
        cache = forward(params, obs)
        probs, value = policy_forward(params, obs[2])
        np.testing.assert_allclose(cache.probs[2], probs)
        assert cache.values[2] == pytest.approx(value)


class TestSampleAction:
    """Tests for sample_action()."""

    def test_degenerate_distribution(self):
        """Test that a point mass always yields its action."""
        rng = np.random.default_rng(0)
        assert {sample_action(np.array([1.0, 0.0, 0.0]), rng) for _ in range(200)} == {0}

    def test_zero_probability_never_sampled(self):
        """Test that impossible actions are never drawn."""
        rng = np.random.default_rng(1)
        draws = {sample_action(np.array([0.0, 0.5, 0.0, 0.5]), rng) for _ in range(500)}
        assert draws <= {1, 3}

    def test_reproducible_with_seed(self):
        """Test equal sequences for equal seeds."""
        probs = np.array([0.2, 0.3, 0.5])
        rng_a, rng_b = np.random.default_rng(7), np.random.default_rng(7)
        assert [sample_action(probs, rng_a) for _ in range(50)] == \
            [sample_action(probs, rng_b) for _ in range(50)]

    def test_empirical_frequencies(self):
        """Test frequencies over many draws against the distribution."""
        probs = np.array([0.2, 0.5, 0.3])
        rng = np.random.default_rng(3)
        n = 100000
        counts = np.bincount([sample_action(probs, rng) for _ in range(n)], minlength=3)
        sigma = np.sqrt(n * probs * (1 - probs))
        assert np.all(np.abs(counts - n * probs) <= 4 * sigma)


class TestGae:
    """Tests for compute_gae()."""

    def test_worked_example(self):
        """Test a two-step rollout computed by hand."""
        adv, returns = compute_gae(np.array([1.0, 0.0]), np.array([0.5, 0.4]), 0.3, 0.99, 0.95)
        assert adv[1] == pytest.approx(-0.103, abs=1e-12)
        assert adv[0] == pytest.approx(0.896 - 0.99 * 0.95 * 0.103, abs=1e-12)
        np.testing.assert_allclose(returns, adv + np.array([0.5, 0.4]))

    def test_matches_brute_force(self):
        """Test random rollouts against the double-loop definition."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 65))
            rewards, values = rng.normal(size=n), rng.normal(size=n)
            bootstrap = float(rng.normal())
            gamma = 1.0 - float(rng.uniform(0.0, 1.0))
            lam = float(rng.uniform(0.0, 1.0))
            adv, _ = compute_gae(rewards, values, bootstrap, gamma, lam)
            np.testing.assert_allclose(adv, brute_force_gae(rewards, values, bootstrap,
                                                            gamma, lam), atol=1e-10)

    def test_lambda_zero_is_td_error(self):
        """Test the one-step limit."""
        rewards, values = np.array([1.0, -1.0, 0.5]), np.array([0.2, 0.1, 0.0])
        adv, _ = compute_gae(rewards, values, 0.7, 0.9, 0.0)
        expected = rewards + 0.9 * np.array([0.1, 0.0, 0.7]) - values
        np.testing.assert_array_equal(adv, expected)

    def test_lambda_one_is_monte_carlo(self):
        """Test the discounted-return limit."""
        rewards, values = np.array([1.0, 0.0, 2.0]), np.array([0.3, 0.2, 0.1])
        gamma, bootstrap = 0.9, 0.5
        adv, _ = compute_gae(rewards, values, bootstrap, gamma, 1.0)
        for t in range(3):
            ret = sum(gamma ** (k - t) * rewards[k] for k in range(t, 3))
            ret += gamma ** (3 - t) * bootstrap
            assert adv[t] == pytest.approx(ret - values[t], abs=1e-12)

    def test_length_mismatch(self):
        """Test that unequal inputs raise ValueError."""
        with pytest.raises(ValueError, match="equal length"):
            compute_gae(np.zeros(3), np.zeros(2), 0.0, 0.99, 0.95)


class TestRatioAndObjective:
    """Tests for probability_ratio() and clipped_objective()."""

    def test_same_params_ratio_is_one(self):
        """Test that identical parameters give a ratio of exactly one."""
        params = init_params(3, 2, 4, np.random.default_rng(0))
        assert probability_ratio(params, params, np.ones(3), 1) == 1.0

    def test_known_ratio(self):
        """Test 0.6 / 0.3."""
        ratio = probability_ratio(two_action_params(0.6), two_action_params(0.3), np.ones(3), 0)
        assert ratio == pytest.approx(2.0)

    def test_ratios_compose(self):
        """Test telescoping of ratios."""
        rng = np.random.default_rng(4)
        p0, p1, p2 = (init_params(3, 2, 4, rng) for _ in range(3))
        obs = np.ones(3)
        assert probability_ratio(p1, p0, obs, 1) * probability_ratio(p2, p1, obs, 1) == \
            pytest.approx(probability_ratio(p2, p0, obs, 1))

    def test_clipped_examples(self):
        """Test the clipped term for positive and negative advantages."""
        assert clipped_objective(np.array(2.0), np.array(1.0), 0.2) == pytest.approx(1.2)
        assert clipped_objective(np.array(0.5), np.array(-1.0), 0.2) == pytest.approx(-0.8)

    def test_clipped_never_exceeds_unclipped(self):
        """Test the pessimistic bound on random triples."""
        rng = np.random.default_rng(5)
        ratio = rng.uniform(0.0, 3.0, size=100000)
        adv = rng.normal(size=100000)
        eps = rng.uniform(0.01, 1.0, size=100000)
        assert np.all(clipped_objective(ratio, adv, eps) <= ratio * adv + 1e-12)


class TestPpoLoss:
    """Tests for ppo_loss() and gradient_check()."""

    def test_identity_case_objective(self):
        """Test that unchanged parameters give mean advantage as the objective."""
        rng = np.random.default_rng(0)
        params = init_params(5, 3, 8, rng)
        batch = random_minibatch(5, 3, 16, rng)
        _, _, info = ppo_loss(params, params, batch, PpoConfig(), normalize=False)
        assert info.clip_objective == pytest.approx(batch.advantages.mean())
        assert info.clip_fraction == 0.0

    def test_empty_minibatch(self):
        """Test that an empty minibatch raises ValueError."""
        params = zero_params(2, 2, 2)
        empty = Minibatch(np.zeros((0, 2)), np.zeros(0, dtype=int), np.zeros(0), np.zeros(0))
        with pytest.raises(ValueError, match="Empty minibatch"):
            ppo_loss(params, params, empty, PpoConfig())

    def test_gradient_check_full_loss(self):
        """Test analytic against finite-difference gradients."""
        rng = np.random.default_rng(1)
        for _ in range(20):
            params = init_params(6, 4, 8, rng)
            batch = random_minibatch(6, 4, 12, rng)
            assert gradient_check(params, batch, h=1e-5) <= 1e-4

    def test_gradient_check_linear_critic(self):
        """Test a linear critic under a quadratic value loss to rounding precision."""
        rng = np.random.default_rng(3)
        params = init_params(4, 3, 8, rng)
        features = rng.normal(size=(32, 8))
        targets = rng.normal(size=32)

        def linear_value_loss(p, mb):
            weights = p.arrays["critic_w3"][:, 0]
            residual = features @ weights + p.arrays["critic_b3"][0] - targets
            grads = p.zeros_like()
            grads.arrays["critic_w3"] = (features.T @ residual / len(targets))[:, None]
            grads.arrays["critic_b3"] = np.array([residual.mean()])
            return 0.5 * float(np.mean(residual ** 2)), grads

        batch = random_minibatch(4, 3, 32, rng)
        error = gradient_check(params, batch, h=1e-3, loss_fn=linear_value_loss,
                               max_params=None)
        assert error <= 1e-8

    def test_gradient_check_detects_corruption(self):
        """Test that a wrong gradient is reported."""
        rng = np.random.default_rng(2)
        params = init_params(4, 3, 6, rng)
        batch = random_minibatch(4, 3, 8, rng)
        config = PpoConfig()

        def corrupted(p, mb):
            loss, grads, _ = ppo_loss(p, params, mb, config)
            grads.arrays["critic_b3"] = grads.arrays["critic_b3"] + 1.0
            return loss, grads

        assert gradient_check(params, batch, loss_fn=corrupted) > 1e-2


class TestUpdate:
    """Tests for update() and the optimizers."""

    def test_zero_learning_rate_keeps_params(self):
        """Test that a zero step leaves the weights bit-identical."""
        params, buffer = filled_buffer()
        config = PpoConfig(learning_rate=0.0, batch_size=8, buffer_size=32)
        updated, _ = update(params, buffer, config, np.random.default_rng(0))
        np.testing.assert_array_equal(updated.flatten(), params.flatten())

    def test_update_is_reproducible(self):
        """Test equal results for equal shuffling seeds."""
        params, buffer = filled_buffer()
        config = PpoConfig(batch_size=32, buffer_size=32, epochs_per_update=1)
        first, _ = update(params, buffer, config, np.random.default_rng(3))
        second, _ = update(params, buffer, config, np.random.default_rng(3))
        np.testing.assert_array_equal(first.flatten(), second.flatten())

    def test_update_counts_minibatches(self):
        """Test epochs times ceil(T / M) optimizer steps."""
        params, buffer = filled_buffer()
        config = PpoConfig(batch_size=10, buffer_size=32, epochs_per_update=2)
        _, info = update(params, buffer, config, np.random.default_rng(0))
        assert info.minibatches == 2 * 4

    def test_small_step_lowers_loss(self):
        """Test that one full-batch step descends on the loss."""
        for seed in range(5):
            params, buffer = filled_buffer(seed=seed)
            config = PpoConfig(learning_rate=1e-3, batch_size=32, buffer_size=32,
                               epochs_per_update=1)
            batch = buffer.full_batch()
            before, _, _ = ppo_loss(params, params, batch, config)
            updated, _ = update(params, buffer, config, np.random.default_rng(0))
            after, _, _ = ppo_loss(updated, params, batch, config)
            assert after < before

    def test_batch_larger_than_buffer(self):
        """Test that oversize minibatches are rejected."""
        params, buffer = filled_buffer()
        with pytest.raises(ValueError, match="exceeds"):
            update(params, buffer, PpoConfig(batch_size=64), np.random.default_rng(0))

    def test_adam_state_round_trip(self):
        """Test that a restored Adam continues identically."""
        params, buffer = filled_buffer()
        config = PpoConfig(optimizer="adam", batch_size=16, buffer_size=32,
                           epochs_per_update=1)
        adam = make_optimizer(config)
        params, _ = update(params, buffer, config, np.random.default_rng(0), adam)
        clone = AdamOptimizer(config.learning_rate)
        clone.load_state_dict(adam.state_dict())
        a, _ = update(params, buffer, config, np.random.default_rng(1), adam)
        b, _ = update(params, buffer, config, np.random.default_rng(1), clone)
        np.testing.assert_array_equal(a.flatten(), b.flatten())

    def test_unknown_optimizer(self):
        """Test that unknown optimizer names raise ValueError."""
        with pytest.raises(ValueError, match="Unknown optimizer"):
            make_optimizer(PpoConfig(optimizer="rmsprop"))


class TestRollouts:
    """Tests for collect_rollout() and RolloutBuffer."""

    def test_single_step_rollout(self):
        """Test T=1 with a bootstrap value."""
        env = make_env()
        params = init_params(env.obs_dim, env.n_actions, 8, np.random.default_rng(0))
        buffer = collect_rollout(env, params, 1, np.random.default_rng(0))
        assert len(buffer) == 1
        assert buffer.bootstrap_value is not None

    def test_equal_seeds_equal_buffers(self):
        """Test rollout determinism."""
        _, first = filled_buffer(seed=3)
        _, second = filled_buffer(seed=3)
        np.testing.assert_array_equal(first.obs, second.obs)
        np.testing.assert_array_equal(first.actions, second.actions)
        np.testing.assert_array_equal(first.rewards, second.rewards)

    def test_buffer_rewards_match_env_ledger(self):
        """Test that buffered rewards add up to the environment's total."""
        env = make_env(seed=2)
        params = init_params(env.obs_dim, env.n_actions, 8, np.random.default_rng(2))
        buffer = collect_rollout(env, params, 32, np.random.default_rng(2))
        assert buffer.rewards.sum() == pytest.approx(env.stats.reward)
        assert buffer.stats.steps == 32

    def test_capacity_enforced(self):
        """Test that rollouts longer than the buffer are rejected."""
        env = make_env()
        params = zero_params(env.obs_dim, env.n_actions, 4)
        with pytest.raises(ValueError, match="exceeds buffer capacity"):
            collect_rollout(env, params, 5, np.random.default_rng(0), RolloutBuffer(capacity=4))

    def test_compute_requires_bootstrap(self):
        """Test that advantages need a collected rollout."""
        buffer = RolloutBuffer(capacity=2)
        buffer.add(Transition(np.zeros(2), 0, 1.0, np.zeros(2), 0.0, 0.0))
        with pytest.raises(ValueError, match="Bootstrap value missing"):
            buffer.compute(0.99, 0.95)

    def test_minibatch_sizes(self):
        """Test that the last minibatch holds the remainder."""
        _, buffer = filled_buffer()
        sizes = [len(mb) for mb in buffer.minibatches(10, np.random.default_rng(0))]
        assert sizes == [10, 10, 10, 2]
