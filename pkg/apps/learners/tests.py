import itertools

import numpy as np
import pytest

from apps.approximator.network import MlpParams
from apps.core.exceptions import ConfigurationError, ContractViolation
from apps.core.utils import make_rng
from apps.envs.base import STAY, StepRecord, Trajectory
from apps.envs.registry import EnvKind, make_env
from apps.learners import updates
from apps.learners.critics import (
    QCritic,
    Transition,
    coma_advantage,
    episode_transitions,
    init_critic,
    one_hot_actions,
    td_error,
    td_update_critic,
)
from apps.learners.registry import ALGORITHMS, Algorithm, build_learner
from apps.learners.returns import (
    aristocrat_baselines,
    aristocrat_difference,
    difference_returns,
    discounted_suffix_sums,
    returns,
)
from apps.learners.rollout import run_episode
from apps.policy.agents import AgentPolicy, JointPolicy, init_joint_policy
from apps.reward_model.network import init_reward_network

GAMMA = 0.95

# 1-step, 2-agent, 3-action cooperative game
PAYOFF = np.array(
    [
        [1.0, -0.5, 0.3],
        [0.2, 2.0, -1.0],
        [0.7, 0.0, 1.5],
    ]
)
TABULAR_OBS = np.ones(1)


def tabular_reward(state, joint_action):
    return float(PAYOFF[joint_action[0], joint_action[1]])


def tabular_policy(rng, n_actions=3):
    return JointPolicy(
        tuple(
            AgentPolicy(
                MlpParams(
                    w1=rng.normal(size=(4, 1)),
                    b1=rng.normal(size=4),
                    w2=rng.normal(size=(n_actions, 4)),
                    b2=rng.normal(size=n_actions),
                ),
                agent_i,
            )
            for agent_i in range(2)
        )
    )


def tabular_episode(joint_action):
    trajectory = Trajectory()
    trajectory.append(
        StepRecord(None, (TABULAR_OBS, TABULAR_OBS), tuple(joint_action), tabular_reward(None, joint_action))
    )
    return trajectory


def joint_probability(joint_policy, joint_action):
    return float(
        np.prod([policy.action_distribution(TABULAR_OBS)[a] for policy, a in zip(joint_policy, joint_action)])
    )


def expected_parameters(joint_policy, update):
    """Probability-weighted parameters after ``update`` over every joint action."""
    totals = [np.zeros_like(policy.params.flat()) for policy in joint_policy]
    for joint_action in itertools.product(range(3), repeat=2):
        weight = joint_probability(joint_policy, joint_action)
        updated = update(tabular_episode(joint_action))
        for agent_i, policy in enumerate(updated):
            totals[agent_i] += weight * policy.params.flat()
    return totals


def exact_tabular_critic():
    """Critic whose Q equals PAYOFF: one hidden unit per joint action fires only for that pair."""
    w1 = np.zeros((9, 6))
    w2 = np.zeros((1, 9))
    for j, k in itertools.product(range(3), repeat=2):
        unit = 3 * j + k
        w1[unit, j] = 1.0
        w1[unit, 3 + k] = 1.0
        w2[0, unit] = PAYOFF[j, k]
    params = MlpParams(w1=w1, b1=-np.ones(9), w2=w2, b2=np.zeros(1))
    return QCritic(params=params, target_params=params, n_agents=2, n_actions=3)


def no_features(state):
    return np.zeros(0)


def random_episodes(env, n_episodes, horizon, seed, hidden_size=16):
    rng = make_rng(seed)
    joint_policy = init_joint_policy(env.n_agents, env.observation_size, rng, hidden_size=hidden_size)
    return joint_policy, [run_episode(env, joint_policy, rng, horizon) for _ in range(n_episodes)]


class TestReturns:
    def test_backward_recursion(self):
        rewards = np.array([1.0, 0.0, 2.0])
        np.testing.assert_allclose(returns(rewards, 0.5).values, [1.5, 1.0, 2.0], atol=1e-12)

    def test_matches_double_loop(self):
        rewards = make_rng(0).normal(size=50)
        expected = [sum(GAMMA**l * rewards[t + l] for l in range(50 - t)) for t in range(50)]
        np.testing.assert_allclose(returns(rewards, GAMMA).values, expected, rtol=0, atol=1e-12)

    def test_undiscounted_sum(self):
        assert returns([1.0, 2.0, 3.0], 1.0).values[0] == 6.0

    def test_empty_episode(self):
        with pytest.raises(ContractViolation):
            returns([], GAMMA)

    def test_invalid_discount(self):
        with pytest.raises(ConfigurationError):
            returns([1.0], 0.0)

    def test_suffix_sums_along_last_axis(self):
        values = np.array([[1.0, 1.0], [0.0, 2.0]])
        np.testing.assert_allclose(discounted_suffix_sums(values, 0.5), [[1.5, 1.0], [1.0, 2.0]])


class TestAristocratDifference:
    def test_uniform_policy(self):
        probs = np.full(3, 1 / 3)
        value = aristocrat_difference(None, (1, 1), 0, probs, tabular_reward)
        assert value == pytest.approx(2.0 - (-0.5 + 2.0 + 0.0) / 3, abs=1e-12)

    def test_deterministic_policy_on_taken_action_gives_zero(self):
        probs = np.array([0.0, 1.0, 0.0])
        assert aristocrat_difference(None, (2, 1), 0, probs, tabular_reward) == pytest.approx(0.0, abs=1e-15)

    def test_observed_reward_is_the_minuend(self):
        probs = np.full(3, 1 / 3)
        value = aristocrat_difference(None, (0, 0), 1, probs, tabular_reward, observed_reward=10.0)
        assert value == pytest.approx(10.0 - (1.0 - 0.5 + 0.3) / 3, abs=1e-12)

    def test_agent_without_influence(self):
        probs = np.full(5, 0.2)
        assert aristocrat_difference(None, (0, 0), 0, probs, lambda s, a: 3.0) == pytest.approx(0.0, abs=1e-15)


class TestTabularGame:
    def test_baseline_is_unbiased(self):
        joint_policy = tabular_policy(make_rng(1))
        for agent_i in range(2):
            total = np.zeros_like(joint_policy[agent_i].params.flat())
            for joint_action in itertools.product(range(3), repeat=2):
                episode = tabular_episode(joint_action)
                baselines = aristocrat_baselines(episode, joint_policy, tabular_reward, GAMMA)
                weights = np.zeros_like(baselines)
                weights[agent_i] = baselines[agent_i]
                gradient = updates.policy_gradients(episode, joint_policy, weights)[agent_i]
                total += joint_probability(joint_policy, joint_action) * gradient.flat()
            assert np.abs(total).max() < 1e-10

    def test_expected_dr_reinforce_equals_expected_reinforce(self):
        joint_policy = tabular_policy(make_rng(2))
        dr = expected_parameters(
            joint_policy,
            lambda episode: updates.dr_reinforce_update(episode, joint_policy, GAMMA, 1.0, tabular_reward),
        )
        plain = expected_parameters(
            joint_policy, lambda episode: updates.reinforce_update(episode, joint_policy, GAMMA, 1.0)
        )
        for a, b in zip(dr, plain):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)

    def test_expected_coma_with_exact_critic_equals_dr_reinforce(self):
        joint_policy = tabular_policy(make_rng(3))
        critic = exact_tabular_critic()
        assert critic.value(np.zeros(0), (1, 1)) == pytest.approx(2.0, abs=1e-12)
        coma = expected_parameters(
            joint_policy,
            lambda episode: updates.coma_update(episode, joint_policy, critic, GAMMA, 1.0, 1e-3, no_features)[0],
        )
        dr = expected_parameters(
            joint_policy,
            lambda episode: updates.dr_reinforce_update(episode, joint_policy, GAMMA, 1.0, tabular_reward),
        )
        for a, b in zip(coma, dr):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


class TestDecomposition:
    @pytest.mark.parametrize("env_kind", [EnvKind.MULTI_ROVER, EnvKind.PREDATOR_PREY])
    def test_difference_return_plus_baseline_is_the_return(self, env_kind):
        env = make_env(env_kind, 3)
        joint_policy, episodes = random_episodes(env, 50, 50, seed=4)
        reward_net = init_reward_network(env.state_size, 3, make_rng(5), hidden_size=32)
        reward_fns = [env.exact_reward, reward_net.as_reward_fn(env.encode_state)]
        for index, episode in enumerate(episodes):
            reward_fn = reward_fns[index % 2]
            delta = difference_returns(episode, joint_policy, reward_fn, GAMMA).per_agent
            baselines = aristocrat_baselines(episode, joint_policy, reward_fn, GAMMA)
            expected = np.tile(returns(episode.rewards, GAMMA).values, (3, 1))
            np.testing.assert_allclose(delta + baselines, expected, rtol=0, atol=1e-10)

    def test_empty_episode(self):
        joint_policy = tabular_policy(make_rng(6))
        with pytest.raises(ContractViolation):
            difference_returns(Trajectory(), joint_policy, tabular_reward, GAMMA)


class TestCritics:
    def test_one_hot_blocks(self):
        np.testing.assert_array_equal(one_hot_actions((1, 0), 3), [0, 1, 0, 1, 0, 0])

    def test_terminal_bootstrap_is_zero(self):
        critic = init_critic(4, 2, make_rng(7), hidden_size=8)
        features = np.linspace(0, 1, 4)
        transition = Transition(features, (0, 1), 0.5)
        assert td_error(critic, transition, GAMMA) == pytest.approx(0.5 - critic.value(features, (0, 1)))

    def test_sarsa_target_uses_target_network(self):
        critic = init_critic(4, 2, make_rng(8), hidden_size=8)
        f, g = np.zeros(4), np.ones(4)
        transition = Transition(f, (0, 1), 1.0, g, (2, 3))
        expected = 1.0 + GAMMA * critic.target_value(g, (2, 3)) - critic.value(f, (0, 1))
        assert td_error(critic, transition, GAMMA) == pytest.approx(expected, abs=1e-12)

    def test_repeated_updates_converge_on_one_transition(self):
        critic = init_critic(4, 2, make_rng(9))
        transition = Transition(np.full(4, 0.3), (4, 2), 0.7)
        for _ in range(10_000):
            critic = td_update_critic(critic, transition, GAMMA, 0.01)
            if abs(td_error(critic, transition, GAMMA)) < 1e-3:
                break
        assert abs(td_error(critic, transition, GAMMA)) < 1e-3

    def test_target_refresh_period(self):
        critic = init_critic(2, 2, make_rng(10), hidden_size=4, refresh_period=3)
        transition = Transition(np.ones(2), (0, 0), 1.0)
        first = critic.target_params
        for _ in range(2):
            critic = td_update_critic(critic, transition, GAMMA, 0.1)
        assert critic.target_params is first
        critic = td_update_critic(critic, transition, GAMMA, 0.1)
        assert critic.updates_done == 3
        assert critic.target_params is critic.params

    def test_expected_counterfactual_advantage_is_zero(self):
        env = make_env(EnvKind.MULTI_ROVER, 3)
        joint_policy, episodes = random_episodes(env, 100, 10, seed=11)
        critic = init_critic(env.state_size, 3, make_rng(12), hidden_size=32)
        for episode in episodes:
            for record in episode:
                features = env.encode_state(record.state)
                for agent_i, policy in enumerate(joint_policy):
                    probs = policy.action_distribution(record.observations[agent_i])
                    expected = sum(
                        probs[b]
                        * coma_advantage(
                            critic, features, record.joint_action[:agent_i] + (b,) + record.joint_action[agent_i + 1 :],
                            agent_i, probs,
                        )
                        for b in range(5)
                    )
                    assert abs(expected) < 1e-10

    def test_episode_transitions(self):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        _, (episode,) = random_episodes(env, 1, 4, seed=13)
        transitions = episode_transitions(episode, env.encode_state)
        assert len(transitions) == 4
        assert [t.terminal for t in transitions] == [False, False, False, True]
        assert transitions[0].next_joint_action == episode.steps[1].joint_action


class TestUpdates:
    def setup_method(self):
        self.env = make_env(EnvKind.MULTI_ROVER, 2)
        self.joint_policy, (self.episode,) = random_episodes(self.env, 1, 6, seed=14, hidden_size=8)

    def test_reinforce_weights(self):
        shared = GAMMA ** np.arange(6) * returns(self.episode.rewards, GAMMA).values
        gradients = updates.policy_gradients(self.episode, self.joint_policy, np.tile(shared, (2, 1)))
        expected = self.joint_policy.apply_gradients(gradients, 0.01)
        updated = updates.reinforce_update(self.episode, self.joint_policy, GAMMA, 0.01)
        for a, b in zip(updated, expected):
            assert a.params.allclose(b.params, atol=1e-15)

    def test_zero_rewards_leave_reinforce_unchanged(self):
        episode = Trajectory([StepRecord(r.state, r.observations, r.joint_action, 0.0) for r in self.episode])
        updated = updates.reinforce_update(episode, self.joint_policy, GAMMA, 0.1)
        for a, b in zip(updated, self.joint_policy):
            assert a.params.allclose(b.params)

    def test_dr_reinforce_r_uses_pre_episode_reward_net(self):
        net = init_reward_network(self.env.state_size, 2, make_rng(15), hidden_size=16)
        policies, trained = updates.dr_reinforce_r_update(
            self.episode, self.joint_policy, net, GAMMA, 0.01, 0.01, self.env.encode_state
        )
        expected = updates.dr_reinforce_update(
            self.episode, self.joint_policy, GAMMA, 0.01, net.as_reward_fn(self.env.encode_state)
        )
        for a, b in zip(policies, expected):
            assert a.params.allclose(b.params)
        assert not trained.params.allclose(net.params)

    @pytest.mark.parametrize("update", [updates.coma_update, updates.q_a2c_update])
    def test_critic_methods_train_once_per_step(self, update):
        critic = init_critic(self.env.state_size, 2, make_rng(16), hidden_size=16)
        policies, trained = update(self.episode, self.joint_policy, critic, GAMMA, 0.01, 0.01, self.env.encode_state)
        assert trained.updates_done == len(self.episode)
        assert policies.n_agents == 2
        assert not policies[0].params.allclose(self.joint_policy[0].params)

    def test_q_a2c_weights_follow_pre_episode_critic(self):
        critic = init_critic(self.env.state_size, 2, make_rng(17), hidden_size=16)
        q_values = np.array([critic.value(self.env.encode_state(r.state), r.joint_action) for r in self.episode])
        weights = np.tile(GAMMA ** np.arange(6) * q_values, (2, 1))
        expected = self.joint_policy.apply_gradients(
            updates.policy_gradients(self.episode, self.joint_policy, weights), 0.01
        )
        policies, _ = updates.q_a2c_update(
            self.episode, self.joint_policy, critic, GAMMA, 0.01, 0.01, self.env.encode_state
        )
        for a, b in zip(policies, expected):
            assert a.params.allclose(b.params, atol=1e-15)

    def test_colby_uses_default_action(self):
        nets = [init_reward_network(self.env.state_size, 1, make_rng(18 + i), hidden_size=16) for i in range(2)]
        features = [self.env.encode_state(r.state) for r in self.episode]
        deltas = np.array(
            [self.episode.rewards - np.array([net.predict(f, (STAY,)) for f in features]) for net in nets]
        )
        weights = GAMMA ** np.arange(6) * discounted_suffix_sums(deltas, GAMMA)
        expected = self.joint_policy.apply_gradients(
            updates.policy_gradients(self.episode, self.joint_policy, weights), 0.01
        )
        policies, trained = updates.colby_update(
            self.episode, self.joint_policy, nets, GAMMA, 0.01, 0.01, self.env.encode_state
        )
        for a, b in zip(policies, expected):
            assert a.params.allclose(b.params, atol=1e-15)
        assert len(trained) == 2


class TestRollout:
    def test_episode_contract(self):
        env = make_env(EnvKind.PREDATOR_PREY, 3)
        _, (episode,) = random_episodes(env, 1, 20, seed=19)
        assert len(episode) == 20
        for t, record in enumerate(episode):
            assert record.state.step == t
            assert record.reward == env.exact_reward(record.state, record.joint_action)

    def test_start_state_and_first_action(self):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        joint_policy = init_joint_policy(2, env.observation_size, make_rng(20), hidden_size=4)
        start = env.reset(3)
        episode = run_episode(env, joint_policy, make_rng(21), 3, start_state=start, first_action=(1, 2))
        assert episode.steps[0].state == start
        assert episode.steps[0].joint_action == (1, 2)

    def test_reproducible(self):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        _, (a,) = random_episodes(env, 1, 15, seed=22)
        _, (b,) = random_episodes(env, 1, 15, seed=22)
        assert [r.joint_action for r in a] == [r.joint_action for r in b]
        np.testing.assert_array_equal(a.rewards, b.rewards)


class TestRegistry:
    @pytest.mark.parametrize("algorithm", Algorithm.values)
    def test_every_algorithm_trains_one_episode(self, algorithm):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        rng = make_rng(23)
        learner = build_learner(
            algorithm, env, rng, gamma=GAMMA, policy_lr=1e-3, critic_lr=1e-3, policy_hidden=8, critic_hidden=16
        )
        before = learner.joint_policy
        learner.update(run_episode(env, learner.joint_policy, rng, 5))
        assert learner.joint_policy is not before
        snapshot = learner.snapshot()
        assert JointPolicy.from_bytes(snapshot["policies"]).n_agents == 2

    def test_snapshot_names(self):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        colby = build_learner("colby", env, make_rng(24), gamma=GAMMA, policy_lr=1e-3, critic_lr=1e-3)
        assert set(colby.snapshot()) == {"policies", "local_reward_net_0", "local_reward_net_1"}
        coma = build_learner("coma", env, make_rng(24), gamma=GAMMA, policy_lr=1e-3, critic_lr=1e-3)
        assert set(coma.snapshot()) == {"policies", "critic"}

    def test_registry_covers_every_algorithm(self):
        assert set(ALGORITHMS) == set(Algorithm)

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigurationError):
            build_learner("sarsa", make_env(EnvKind.MULTI_ROVER, 2), make_rng(0), gamma=GAMMA, policy_lr=1e-3)

    def test_critic_rate_required(self):
        with pytest.raises(ConfigurationError):
            build_learner("coma", make_env(EnvKind.MULTI_ROVER, 2), make_rng(0), gamma=GAMMA, policy_lr=1e-3)
