import numpy as np
import pytest

from apps.approximator.network import MlpParams
from apps.core.exceptions import InsufficientDataError
from apps.core.utils import make_rng
from apps.envs.registry import EnvKind, make_env
from apps.learners.returns import aristocrat_difference
from apps.reward_model.network import (
    RewardNetwork,
    dataset_mse,
    estimated_difference_reward,
    fit,
    init_reward_network,
)


def first_agent_table_net(values):
    """Two agents, two actions: the output depends only on agent 0's action."""
    w1 = np.zeros((2, 4))
    w1[0, 0] = w1[1, 1] = 1.0
    params = MlpParams(w1=w1, b1=np.zeros(2), w2=np.array([values]), b2=np.zeros(1))
    return RewardNetwork(params=params, n_agents=2, n_actions=2)


def labelled_samples(env, n_samples, rng):
    samples = []
    for _ in range(n_samples):
        state = env.random_state(rng)
        joint_action = tuple(int(a) for a in rng.integers(env.n_actions, size=env.n_agents))
        samples.append((env.encode_state(state), joint_action, env.exact_reward(state, joint_action)))
    return samples


class TestRegression:
    def test_constant_reward_stream(self):
        net = init_reward_network(4, 2, make_rng(0), hidden_size=32)
        features = np.full(4, 0.2)
        actions = [(0, 1), (3, 4)]
        for step in range(10_000):
            net = net.regress_step(features, actions[step % 2], 0.3, 0.01)
        for joint_action in actions:
            assert net.loss(features, joint_action, 0.3) < 1e-6

    def test_single_sample_fit(self):
        net = init_reward_network(6, 3, make_rng(1), hidden_size=64)
        sample = (np.linspace(0.0, 0.5, 6), (2, 0, 4), 0.7)
        net, history = fit(net, [sample], learning_rate=0.01, epochs=2000)
        assert abs(net.predict(sample[0], sample[1]) - 0.7) < 1e-3
        assert history[-1] < history[0]

    def test_empty_dataset(self):
        net = init_reward_network(2, 2, make_rng(2), hidden_size=4)
        with pytest.raises(InsufficientDataError):
            fit(net, [], 0.01, 1)
        with pytest.raises(InsufficientDataError):
            dataset_mse(net, [])

    def test_reward_fn_adapter(self):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        net = init_reward_network(env.state_size, 2, make_rng(3), hidden_size=8)
        state = env.reset(4)
        assert net.as_reward_fn(env.encode_state)(state, (1, 2)) == net.predict(env.encode_state(state), (1, 2))

    @pytest.mark.slow
    def test_fits_multi_rover_rewards(self):
        env = make_env(EnvKind.MULTI_ROVER, 3)
        rng = make_rng(5)
        samples = labelled_samples(env, 1000, rng)
        net = init_reward_network(env.state_size, 3, rng)
        net, history = fit(net, samples, learning_rate=25e-3, epochs=200, rng=rng)
        low, high = env.reward_bounds()
        assert history[-1] < 0.05 * (high - low) ** 2


class TestEstimatedDifference:
    def test_hand_computed(self):
        net = first_agent_table_net([0.8, 0.2])
        value = estimated_difference_reward(net, np.zeros(0), (0, 1), 0.8, 0, np.array([0.25, 0.75]))
        assert value == pytest.approx(0.45, abs=1e-12)

    def test_matches_counterfactual_formula(self):
        env = make_env(EnvKind.MULTI_ROVER, 3)
        net = init_reward_network(env.state_size, 3, make_rng(6), hidden_size=16)
        state = env.reset(7)
        probs = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
        observed = env.exact_reward(state, (0, 2, 4))
        expected = aristocrat_difference(
            state, (0, 2, 4), 1, probs, net.as_reward_fn(env.encode_state), observed_reward=observed
        )
        value = estimated_difference_reward(net, env.encode_state(state), (0, 2, 4), observed, 1, probs)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_exact_model_recovers_exact_difference(self):
        env = make_env(EnvKind.MULTI_ROVER, 2)
        state = env.reset(8)
        probs = np.full(5, 0.2)
        encoded = env.encode_state(state)
        lookup = {
            (a, b): env.exact_reward(state, (a, b)) for a in range(5) for b in range(5)
        }

        class TableNet:
            def predict(self, features, joint_action):
                assert np.array_equal(features, encoded)
                return lookup[tuple(joint_action)]

        observed = lookup[(3, 1)]
        value = estimated_difference_reward(TableNet(), encoded, (3, 1), observed, 0, probs)
        exact = aristocrat_difference(state, (3, 1), 0, probs, env.exact_reward)
        assert value == pytest.approx(exact, abs=1e-12)
