import math

import numpy as np
import pytest
from scipy.special import softmax
from scipy.stats import chisquare

from apps.analysis.datasets import (
    StateActionSample,
    collect_off_policy_dataset,
    collect_on_policy_dataset,
    ground_truth_q,
    rollout_returns,
)
from apps.analysis.noise import (
    NoiseKind,
    NoiseProfile,
    NoiseRow,
    default_noise_profile,
    noise_study,
)
from apps.analysis.prediction import DatasetKind, ModelKind, prediction_error_report
from apps.approximator.network import MlpParams
from apps.core.exceptions import ConfigurationError, ContractViolation, InsufficientDataError
from apps.core.utils import make_rng
from apps.envs.base import STAY
from apps.envs.registry import EnvKind, make_env
from apps.policy.agents import AgentPolicy, JointPolicy, init_joint_policy

GAMMA = 0.95


def stay_only_policy(n_agents, observation_size, hidden_size=4):
    b2 = np.zeros(5)
    b2[STAY] = 1000.0
    params = MlpParams(
        w1=np.zeros((hidden_size, observation_size)),
        b1=np.zeros(hidden_size),
        w2=np.zeros((5, hidden_size)),
        b2=b2,
    )
    return JointPolicy(tuple(AgentPolicy(params, i) for i in range(n_agents)))


def fixed_logit_policy(n_agents, observation_size, logits, hidden_size=4):
    params = MlpParams(
        w1=np.zeros((hidden_size, observation_size)),
        b1=np.zeros(hidden_size),
        w2=np.zeros((5, hidden_size)),
        b2=np.asarray(logits, dtype=float),
    )
    return JointPolicy(tuple(AgentPolicy(params, i) for i in range(n_agents)))


def token_dataset(n):
    return [StateActionSample(state=i, joint_action=(0, 0)) for i in range(n)]


class TestDatasets:
    def test_empty_on_policy_dataset(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = init_joint_policy(2, env.observation_size, rng, hidden_size=4)
        assert collect_on_policy_dataset(joint_policy, env, 0, rng) == []

    def test_on_policy_samples_carry_exact_rewards(self, rng):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        joint_policy = init_joint_policy(2, env.observation_size, rng, hidden_size=4)
        samples = collect_on_policy_dataset(joint_policy, env, 7, rng, horizon=3)
        assert len(samples) == 7
        assert [s.state.step for s in samples] == [0, 1, 2, 0, 1, 2, 0]
        for state, joint_action, reward in samples:
            assert reward == env.exact_reward(state, joint_action)

    def test_off_policy_actions_are_uniform(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        samples = collect_off_policy_dataset(env, 2, 5000, rng)
        actions = np.array([s.joint_action for s in samples])
        for agent_i in range(2):
            frequencies = np.bincount(actions[:, agent_i], minlength=5) / 5000
            np.testing.assert_allclose(frequencies, 0.2, atol=0.03)
        assert all(s.reward is None and s.state.step == 0 for s in samples)

    def test_off_policy_team_size_mismatch(self, rng):
        with pytest.raises(ContractViolation):
            collect_off_policy_dataset(make_env(EnvKind.MULTI_ROVER, 2), 3, 10, rng)

    def test_off_policy_cells_are_uniform(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        samples = collect_off_policy_dataset(env, 2, 5000, rng)
        cells = [row * env.width + col for row, col in (s.state.agent_cells[0] for s in samples)]
        assert chisquare(np.bincount(cells, minlength=100)).pvalue > 0.01

    def test_on_policy_actions_follow_the_policy(self, rng):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        logits = [0.0, 0.5, 1.0, -0.5, 0.2]
        samples = collect_on_policy_dataset(fixed_logit_policy(2, env.observation_size, logits), env, 10_000, rng)
        counts = np.bincount([s.joint_action[0] for s in samples], minlength=5)
        expected = 10_000 * softmax(logits)
        standard_errors = np.sqrt(expected * (1 - softmax(logits)))
        assert np.all(np.abs(counts - expected) < 3 * standard_errors)

    @pytest.mark.parametrize("horizon", [0, -3])
    def test_on_policy_needs_positive_horizon(self, rng, horizon):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = init_joint_policy(2, env.observation_size, rng, hidden_size=4)
        with pytest.raises(ConfigurationError):
            collect_on_policy_dataset(joint_policy, env, 1, rng, horizon=horizon)


class TestGroundTruth:
    def test_zero_discount_is_the_exact_reward(self, rng):
        env = make_env(EnvKind.PREDATOR_PREY, 3)
        joint_policy = init_joint_policy(3, env.observation_size, rng, hidden_size=4)
        state = env.reset(1)
        q = ground_truth_q(env, state, (0, 1, 2), joint_policy, n_rollouts=3, gamma=0.0, rng=rng)
        assert q == env.exact_reward(state, (0, 1, 2))

    def test_stay_only_policy_closed_form(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = stay_only_policy(2, env.observation_size)
        state = env.reset(2)
        reward = env.exact_reward(state, (1, 3))
        expected = reward * (1 - GAMMA**50) / (1 - GAMMA)
        q = ground_truth_q(env, state, (1, 3), joint_policy, n_rollouts=5, gamma=GAMMA, rng=rng)
        assert q == pytest.approx(expected, abs=1e-9)

    def test_rollout_length_follows_step_counter(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = stay_only_policy(2, env.observation_size)
        state = env.reset(3)
        late = type(state)(state.agent_cells, state.entity_cells, step=48)
        reward = env.exact_reward(late, (4, 4))
        values = rollout_returns(env, late, (4, 4), joint_policy, 2, GAMMA, rng, horizon=50)
        np.testing.assert_allclose(values, reward * (1 + GAMMA), atol=1e-12)

    def test_requires_rollouts(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = stay_only_policy(2, env.observation_size)
        with pytest.raises(ConfigurationError):
            rollout_returns(env, env.reset(0), (0, 0), joint_policy, 0, GAMMA, rng)

    def test_doubling_rollouts_stays_within_three_standard_errors(self):
        env = make_env(EnvKind.PREDATOR_PREY, 3)
        joint_policy = init_joint_policy(3, env.observation_size, make_rng(20), hidden_size=4)
        state = type(env.reset(21))([(4, 4), (4, 6), (6, 5)], [(5, 5)])
        joint_action = (0, 1, 2)
        values = rollout_returns(env, state, joint_action, joint_policy, 100, GAMMA, make_rng(22))
        assert values.std() > 0
        q_100 = ground_truth_q(env, state, joint_action, joint_policy, n_rollouts=100, gamma=GAMMA, rng=make_rng(22))
        q_200 = ground_truth_q(env, state, joint_action, joint_policy, n_rollouts=200, gamma=GAMMA, rng=make_rng(22))
        assert q_100 == pytest.approx(values.mean(), abs=1e-12)
        assert abs(q_200 - q_100) < 3 * values.std(ddof=1) / np.sqrt(100)


class TestPredictionErrorReport:
    def test_perfect_model(self):
        def truth(state, joint_action):
            return float(state)

        report = prediction_error_report(truth, token_dataset(5), truth)
        assert report.ok
        assert report.mean == 0.0 and report.std == 0.0 and report.mean_abs == 0.0
        assert report.normalizer == 4.0

    def test_constant_bias(self):
        report = prediction_error_report(
            lambda s, a: s + 0.5, token_dataset(5), lambda s, a: float(s), normalizer=2.0
        )
        assert report.mean == pytest.approx(0.25, abs=1e-12)
        assert report.std == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_statistics(self):
        predictions = {0: 0.5, 1: 1.0, 2: 2.0}
        report = prediction_error_report(
            lambda s, a: predictions[s],
            token_dataset(3),
            lambda s, a: float(s),
            DatasetKind.ON_POLICY,
            ModelKind.Q_CRITIC,
        )
        assert report.normalizer == 2.0
        assert report.mean == pytest.approx(1 / 12, abs=1e-12)
        assert report.std == pytest.approx(math.sqrt(1 / 72), abs=1e-12)
        assert report.sample_count == 3
        assert report.dataset_kind == "on_policy" and report.model_kind == "q_critic"
        assert report.percentiles[50] == pytest.approx(0.0, abs=1e-12)

    def test_constant_truth_is_flagged(self):
        report = prediction_error_report(lambda s, a: 1.0, token_dataset(4), lambda s, a: 3.0)
        assert not report.ok
        assert math.isnan(report.mean) and math.isnan(report.std)

    def test_empty_dataset(self):
        with pytest.raises(InsufficientDataError):
            prediction_error_report(lambda s, a: 0.0, [], lambda s, a: 0.0)


class TestNoiseProfile:
    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            NoiseProfile("laplace", 0.1)

    def test_mask_probability_range(self):
        with pytest.raises(ConfigurationError):
            NoiseProfile(NoiseKind.MASKING, 1.5)

    def test_masking_zeroes_entries(self, rng):
        noisy = NoiseProfile(NoiseKind.MASKING, 0.5).perturb(np.ones(5), 2000, rng)
        assert noisy.shape == (2000, 5)
        assert set(np.unique(noisy)) <= {0.0, 1.0}
        assert noisy.mean() == pytest.approx(0.5, abs=0.02)

    def test_masking_raises_difference_for_positive_baselines(self, rng):
        values = np.array([1.0, 0.5, 2.0, 1.5, 0.25])
        probs = np.full(5, 0.2)
        noisy = NoiseProfile(NoiseKind.MASKING, 0.5).perturb(values, 1000, rng) @ probs
        realized = values[0]
        assert np.mean(realized - noisy) > realized - probs @ values

    def test_uniform_stays_within_half_width(self, rng):
        noisy = NoiseProfile(NoiseKind.UNIFORM, 0.2).perturb(np.zeros(5), 500, rng)
        assert np.abs(noisy).max() <= 0.2

    def test_default_scales(self):
        env = make_env(EnvKind.PREDATOR_PREY, 3)
        assert default_noise_profile(NoiseKind.NORMAL, env).scale == pytest.approx(0.1)
        assert default_noise_profile(NoiseKind.MASKING, env).scale == 0.5


class TestNoiseStudy:
    def test_row_statistics(self):
        row = NoiseRow(0, true_difference=1.0, mean_noisy_difference=1.5, variance=1.0, n_noise_samples=100)
        assert row.bias == 0.5
        assert row.standard_error == pytest.approx(0.1)
        assert row.significant()

    def test_team_size_mismatch(self, rng):
        env = make_env(EnvKind.MULTI_ROVER, 3)
        with pytest.raises(ContractViolation):
            noise_study(env, 2, NoiseProfile(NoiseKind.NORMAL, 0.1), rng=rng)

    @pytest.mark.parametrize("kind", [NoiseKind.NORMAL, NoiseKind.UNIFORM])
    @pytest.mark.parametrize("env_kind", [EnvKind.MULTI_ROVER, EnvKind.PREDATOR_PREY])
    def test_zero_mean_noise_is_unbiased(self, kind, env_kind):
        env = make_env(env_kind, 3)
        rows = noise_study(env, 3, default_noise_profile(kind, env, rng_seed=7), rng=make_rng(8))
        assert len(rows) == 200
        biased = sum(row.significant() for row in rows)
        assert biased / len(rows) < 0.05

    def test_masking_biases_dense_rewards_more_than_sparse(self):
        fractions = {}
        for env_kind in EnvKind:
            env = make_env(env_kind, 3)
            rows = noise_study(env, 3, default_noise_profile(NoiseKind.MASKING, env, rng_seed=9), rng=make_rng(10))
            fractions[env_kind] = sum(row.significant() for row in rows) / len(rows)
            if env_kind == EnvKind.MULTI_ROVER:
                # non-positive rewards: masking shrinks the baseline toward zero
                assert all(row.bias <= 1e-12 for row in rows)
        assert fractions[EnvKind.MULTI_ROVER] >= 0.8
        assert fractions[EnvKind.PREDATOR_PREY] < fractions[EnvKind.MULTI_ROVER]

    def test_noise_draws_are_reproducible(self):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        profile = NoiseProfile(NoiseKind.NORMAL, 0.1, rng_seed=3)
        first = noise_study(env, 2, profile, n_noise_samples=50, n_state_samples=5, rng=make_rng(4))
        second = noise_study(env, 2, profile, n_noise_samples=50, n_state_samples=5, rng=make_rng(4))
        assert first == second
