"""
State-action datasets and rollout-based ground-truth action values.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ConfigurationError, ContractViolation
from apps.core.validators import validate_positive
from apps.learners.returns import discount_powers
from apps.learners.rollout import run_episode

logger = logging.getLogger(__name__)

DEFAULT_DATASET_SIZE = 5000
DEFAULT_GROUND_TRUTH_ROLLOUTS = 100
DEFAULT_HORIZON = 50


@dataclass(frozen=True)
class StateActionSample:
    """A (state, joint_action) pair; ``reward`` is None for off-policy samples."""

    state: object
    joint_action: tuple
    reward: float = None

    def __iter__(self):
        yield self.state
        yield self.joint_action
        if self.reward is not None:
            yield self.reward


def collect_on_policy_dataset(joint_policy, env, n_samples, rng, horizon=DEFAULT_HORIZON):
    """
    Step records gathered by executing ``joint_policy`` from random resets.

    Episodes are rolled out to ``horizon`` and the last one is truncated so
    exactly ``n_samples`` records are returned.

    Returns:
        List of StateActionSample with the observed reward
    """
    if n_samples < 0:
        raise ContractViolation(f"n_samples must be non-negative, got {n_samples}")
    validate_positive(horizon, "horizon")
    samples = []
    while len(samples) < n_samples:
        trajectory = run_episode(env, joint_policy, rng, horizon)
        for record in trajectory:
            samples.append(StateActionSample(record.state, record.joint_action, record.reward))
            if len(samples) == n_samples:
                break
    logger.debug(f"collected {len(samples)} on-policy samples from {env!r}")
    return samples


def collect_off_policy_dataset(env, n_agents, n_samples, rng):
    """
    Independent samples uniform over cell placements and the 5^N joint actions.

    Returns:
        List of StateActionSample without rewards
    """
    if n_agents != env.n_agents:
        raise ContractViolation(f"{env!r} has {env.n_agents} agents, asked for {n_agents}")
    if n_samples < 0:
        raise ContractViolation(f"n_samples must be non-negative, got {n_samples}")
    samples = []
    for _ in range(n_samples):
        state = env.random_state(rng)
        joint_action = tuple(int(a) for a in rng.integers(env.n_actions, size=n_agents))
        samples.append(StateActionSample(state, joint_action))
    return samples


def rollout_returns(env, state, joint_action, joint_policy, n_rollouts, gamma, rng, horizon=DEFAULT_HORIZON):
    """
    Discounted returns of ``n_rollouts`` episodes that start by executing
    ``joint_action`` in ``state`` and then follow ``joint_policy``.

    The rollout runs for the steps left until ``horizon``, at least one.
    """
    if n_rollouts < 1:
        raise ConfigurationError(f"n_rollouts must be >= 1, got {n_rollouts}")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"discount must lie in [0, 1], got {gamma!r}")
    remaining = max(1, horizon - state.step)
    if gamma == 0.0:
        remaining = 1
    weights = discount_powers(remaining, gamma)
    values = np.empty(n_rollouts)
    for k in range(n_rollouts):
        trajectory = run_episode(
            env, joint_policy, rng, remaining, start_state=state, first_action=joint_action
        )
        values[k] = weights @ trajectory.rewards
    return values


def ground_truth_q(env, state, joint_action, joint_policy, n_rollouts=DEFAULT_GROUND_TRUTH_ROLLOUTS,
                   gamma=0.95, rng=None, horizon=DEFAULT_HORIZON):
    """Monte Carlo estimate of Q^pi(state, joint_action)."""
    if rng is None:
        raise ContractViolation("ground_truth_q needs a random generator")
    return float(rollout_returns(env, state, joint_action, joint_policy, n_rollouts, gamma, rng, horizon).mean())
