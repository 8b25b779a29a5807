import numpy as np
import pytest

from apps.approximator import network
from apps.approximator.network import MlpParams
from apps.core.exceptions import ContractViolation, NumericalDivergenceError
from apps.core.utils import make_rng
from apps.policy.agents import AgentPolicy, JointPolicy, init_agent_policy, init_joint_policy


def policy_with_logits(logits, observation_size=2):
    """Zero hidden layer, output biases equal to ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    params = MlpParams(
        w1=np.zeros((3, observation_size)),
        b1=np.zeros(3),
        w2=np.zeros((logits.size, 3)),
        b2=logits,
    )
    return AgentPolicy(params=params, agent_index=0)


def random_policy(rng, observation_size=4, hidden_size=5):
    params = MlpParams(
        w1=rng.normal(size=(hidden_size, observation_size)),
        b1=rng.normal(size=hidden_size),
        w2=rng.normal(size=(5, hidden_size)),
        b2=rng.normal(size=5),
    )
    return AgentPolicy(params=params, agent_index=0)


class TestActionDistribution:
    def test_zero_network_is_uniform(self):
        policy = AgentPolicy(network.zero_params(4, 8, 5), 0)
        np.testing.assert_allclose(policy.action_distribution(np.ones(4)), np.full(5, 0.2), atol=1e-15)

    def test_shift_invariance(self):
        for level in (-30.0, 0.0, 250.0):
            probs = policy_with_logits([level] * 4 + [level + 1.5]).action_distribution(np.zeros(2))
            assert probs[-1] == pytest.approx(np.exp(1.5) / (4 + np.exp(1.5)), abs=1e-12)

    def test_matches_brute_force(self):
        rng = make_rng(0)
        for _ in range(20):
            logits = rng.normal(scale=3.0, size=5)
            expected = np.exp(logits) / np.exp(logits).sum()
            np.testing.assert_allclose(
                policy_with_logits(logits).action_distribution(np.zeros(2)), expected, rtol=0, atol=1e-12
            )

    def test_stable_for_large_logits(self):
        probs = policy_with_logits([500.0, -500.0, 0.0, 499.0, 10.0]).action_distribution(np.zeros(2))
        assert np.isfinite(probs).all()
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_non_finite_logits(self):
        params = MlpParams(w1=np.zeros((1, 1)), b1=np.zeros(1), w2=np.zeros((5, 1)), b2=[np.inf, 0, 0, 0, 0])
        with pytest.raises(NumericalDivergenceError):
            AgentPolicy(params, 0).action_distribution(np.zeros(1))


class TestSampleAction:
    def test_degenerate_distribution(self):
        policy = policy_with_logits([1000.0, 0.0, 0.0, 0.0, 0.0])
        rng = make_rng(1)
        assert {policy.sample_action(np.zeros(2), rng) for _ in range(100)} == {0}

    def test_uniform_frequencies(self):
        policy = policy_with_logits(np.zeros(5))
        rng = make_rng(2)
        draws = np.array([policy.sample_action(np.zeros(2), rng) for _ in range(10_000)])
        frequencies = np.bincount(draws, minlength=5) / draws.size
        standard_error = np.sqrt(0.2 * 0.8 / draws.size)
        assert np.all(np.abs(frequencies - 0.2) < 3 * standard_error)

    def test_deterministic_per_generator_state(self):
        policy = random_policy(make_rng(3))
        obs = np.ones(4)
        assert policy.sample_action(obs, make_rng(9)) == policy.sample_action(obs, make_rng(9))


class TestGradLogProb:
    def test_score_identity(self):
        rng = make_rng(4)
        for _ in range(20):
            policy = random_policy(rng)
            obs = rng.normal(size=4)
            probs = policy.action_distribution(obs)
            total = sum(probs[a] * policy.grad_log_prob(obs, a).flat() for a in range(5))
            assert np.abs(total).max() < 1e-10

    def test_matches_finite_differences(self):
        rng = make_rng(5)
        h = 1e-5
        for _ in range(100):
            policy = random_policy(rng, observation_size=3, hidden_size=4)
            obs = rng.normal(size=3)
            action = int(rng.integers(5))
            analytic = policy.grad_log_prob(obs, action).flat()
            flat = policy.params.flat()
            numeric = np.zeros_like(flat)
            for k in range(flat.size):
                up, down = flat.copy(), flat.copy()
                up[k] += h
                down[k] -= h
                numeric[k] = (
                    policy.with_params(unflatten(up, policy.params)).log_prob(obs, action)
                    - policy.with_params(unflatten(down, policy.params)).log_prob(obs, action)
                ) / (2 * h)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)

    def test_saturated_policy_has_vanishing_gradient(self):
        policy = policy_with_logits([60.0, 0.0, 0.0, 0.0, 0.0])
        assert policy.grad_log_prob(np.zeros(2), 0).max_abs() < 1e-20

    def test_invalid_action(self):
        with pytest.raises(ContractViolation):
            policy_with_logits(np.zeros(5)).grad_log_prob(np.zeros(2), 5)


def unflatten(flat, like):
    arrays, offset = [], 0
    for array in like.arrays():
        arrays.append(flat[offset : offset + array.size].reshape(array.shape))
        offset += array.size
    return MlpParams(*arrays)


class TestJointPolicy:
    def test_agent_indices_must_be_ordered(self):
        rng = make_rng(6)
        with pytest.raises(ContractViolation):
            JointPolicy((init_agent_policy(1, 4, rng), init_agent_policy(0, 4, rng)))

    def test_sample_gives_one_action_per_agent(self):
        rng = make_rng(7)
        joint = init_joint_policy(3, 6, rng)
        action = joint.sample([np.zeros(6)] * 3, rng)
        assert len(action) == 3
        assert all(0 <= a < 5 for a in action)

    def test_serialization_layout(self):
        joint = init_joint_policy(3, 6, make_rng(8), hidden_size=4)
        data = joint.to_bytes()
        header = np.frombuffer(data, dtype="<i8", count=4)
        assert header[0] == 3
        assert header[1:].sum() + 4 * 8 == len(data)
        restored = JointPolicy.from_bytes(data)
        for original, copy in zip(joint, restored):
            assert copy.params.allclose(original.params)

    def test_mismatched_record_length(self):
        data = bytearray(init_joint_policy(2, 6, make_rng(9), hidden_size=4).to_bytes())
        size = np.frombuffer(bytes(data), dtype="<i8", count=1, offset=8)[0]
        data[8:16] = np.array([size + 8], dtype="<i8").tobytes()
        with pytest.raises(ContractViolation):
            JointPolicy.from_bytes(bytes(data))
