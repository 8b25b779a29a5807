"""
Discounted returns, aristocrat difference rewards and difference returns.
"""
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ContractViolation
from apps.core.validators import validate_discount
from apps.envs.base import substitute_action


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """G_t for every step of an episode."""

    values: np.ndarray
    discount: float


@dataclass(frozen=True, eq=False)
class DifferenceReturnSeries:
    """Per-agent difference returns, shape (N, T)."""

    per_agent: np.ndarray
    discount: float

    def __getitem__(self, agent_i):
        return self.per_agent[agent_i]


def discounted_suffix_sums(values, gamma):
    """out[t] = values[t] + gamma * out[t + 1] along the last axis, out[T] = values[T]."""
    values = np.asarray(values, dtype=np.float64)
    out = np.empty_like(values)
    running = np.zeros(values.shape[:-1])
    for t in range(values.shape[-1] - 1, -1, -1):
        running = values[..., t] + gamma * running
        out[..., t] = running
    return out


def discount_powers(length, gamma):
    return gamma ** np.arange(length, dtype=np.float64)


def returns(rewards, gamma):
    """
    Discounted returns of a reward sequence.

    Raises:
        ContractViolation for an empty reward sequence
    """
    validate_discount(gamma)
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.ndim != 1 or rewards.size == 0:
        raise ContractViolation("returns need a non-empty 1-d reward sequence")
    return ReturnSeries(values=discounted_suffix_sums(rewards, gamma), discount=gamma)


def counterfactual_rewards(state, joint_action, agent_i, n_actions, reward_fn):
    """reward_fn evaluated with agent ``agent_i`` playing each local action in turn."""
    return np.array(
        [reward_fn(state, substitute_action(joint_action, agent_i, b)) for b in range(n_actions)],
        dtype=np.float64,
    )


def aristocrat_difference(state, joint_action, agent_i, action_probs, reward_fn, observed_reward=None):
    """
    Aristocrat-utility difference reward of agent ``agent_i``.

    ``r - sum_b pi(b) * reward_fn(state, a with a^i <- b)``. One reward
    evaluation per local action; the realized reward is the counterfactual at
    the taken action unless ``observed_reward`` is given (learned reward
    functions subtract from the environment's reward instead).

    Args:
        state: Whatever ``reward_fn`` accepts as state
        joint_action: Sequence of action codes
        agent_i: Agent being credited
        action_probs: The agent's action distribution at this state
        reward_fn: Callable (state, joint_action) -> float
        observed_reward: Optional realized reward r_t
    """
    action_probs = np.asarray(action_probs, dtype=np.float64)
    values = counterfactual_rewards(state, joint_action, agent_i, action_probs.size, reward_fn)
    realized = values[joint_action[agent_i]] if observed_reward is None else float(observed_reward)
    return float(realized - action_probs @ values)


def expected_counterfactuals(trajectory, joint_policy, reward_fn):
    """
    Policy-expected counterfactual reward for every agent and step.

    Returns:
        Array of shape (N, T)
    """
    n_agents = joint_policy.n_agents
    expected = np.zeros((n_agents, len(trajectory)))
    for t, record in enumerate(trajectory):
        for agent_i, policy in enumerate(joint_policy):
            probs = policy.action_distribution(record.observations[agent_i])
            values = counterfactual_rewards(record.state, record.joint_action, agent_i, probs.size, reward_fn)
            expected[agent_i, t] = probs @ values
    return expected


def aristocrat_baselines(trajectory, joint_policy, reward_fn, gamma):
    """Discounted sums of the policy-expected counterfactual rewards, shape (N, T)."""
    validate_discount(gamma)
    return discounted_suffix_sums(expected_counterfactuals(trajectory, joint_policy, reward_fn), gamma)


def difference_rewards(trajectory, joint_policy, reward_fn):
    """Per-step difference rewards r_t - E_b[reward_fn(s_t, <a^-i, b>)], shape (N, T)."""
    return trajectory.rewards[None, :] - expected_counterfactuals(trajectory, joint_policy, reward_fn)


def difference_returns(trajectory, joint_policy, reward_fn, gamma):
    """
    Difference returns of every agent over one episode.

    Uses the observed step rewards as minuend, which equals the exact reward
    for environment rewards and gives the estimated variant for learned ones.
    """
    validate_discount(gamma)
    if len(trajectory) == 0:
        raise ContractViolation("difference returns need a non-empty episode")
    deltas = difference_rewards(trajectory, joint_policy, reward_fn)
    return DifferenceReturnSeries(per_agent=discounted_suffix_sums(deltas, gamma), discount=gamma)
