"""
Centralized action-value critics Q(s, a) trained by on-policy TD learning.
"""
from dataclasses import dataclass, replace

import numpy as np

from apps.approximator import network
from apps.approximator.network import Direction
from apps.core.validators import validate_discount
from apps.envs.base import N_ACTIONS, substitute_action

DEFAULT_CRITIC_HIDDEN = 256
DEFAULT_TARGET_REFRESH = 100


def one_hot_actions(actions, n_actions=N_ACTIONS):
    """Concatenated one-hot blocks, one block of ``n_actions`` per entry."""
    actions = np.asarray(actions, dtype=np.int64)
    encoded = np.zeros(actions.size * n_actions)
    encoded[np.arange(actions.size) * n_actions + actions] = 1.0
    return encoded


def state_action_input(state_features, actions, n_actions=N_ACTIONS):
    """State encoding followed by the one-hot action blocks."""
    return np.concatenate([np.asarray(state_features, dtype=np.float64), one_hot_actions(actions, n_actions)])


@dataclass(frozen=True, eq=False)
class Transition:
    """(s, a, r, s', a') with encoded states; ``next_features is None`` marks a terminal step."""

    features: np.ndarray
    joint_action: tuple
    reward: float
    next_features: np.ndarray = None
    next_joint_action: tuple = None

    @property
    def terminal(self):
        return self.next_features is None


@dataclass(frozen=True, eq=False)
class QCritic:
    """
    Q_w(s, a) over state encoding + one-hot joint action, with a frozen
    target copy refreshed every ``refresh_period`` updates.
    """

    params: network.MlpParams
    target_params: network.MlpParams
    n_agents: int
    n_actions: int = N_ACTIONS
    refresh_period: int = DEFAULT_TARGET_REFRESH
    updates_done: int = 0

    def _input(self, features, joint_action):
        return state_action_input(features, joint_action, self.n_actions)

    def value(self, features, joint_action):
        return float(network.forward(self.params, self._input(features, joint_action))[0])

    def target_value(self, features, joint_action):
        return float(network.forward(self.target_params, self._input(features, joint_action))[0])

    def values_for_agent(self, features, joint_action, agent_i):
        """Q with agent ``agent_i``'s action swept over every local action."""
        return np.array(
            [
                self.value(features, substitute_action(joint_action, agent_i, b))
                for b in range(self.n_actions)
            ]
        )

    def gradient(self, features, joint_action):
        return network.backward(self.params, self._input(features, joint_action), np.ones(1))


def init_critic(state_size, n_agents, rng, hidden_size=DEFAULT_CRITIC_HIDDEN, n_actions=N_ACTIONS,
                refresh_period=DEFAULT_TARGET_REFRESH):
    params = network.init_params(state_size + n_agents * n_actions, hidden_size, 1, rng)
    return QCritic(
        params=params,
        target_params=params,
        n_agents=n_agents,
        n_actions=n_actions,
        refresh_period=refresh_period,
    )


def td_error(critic, transition, gamma):
    """delta = r + gamma * Q_target(s', a') - Q(s, a); zero bootstrap on terminal steps."""
    bootstrap = 0.0
    if not transition.terminal:
        bootstrap = critic.target_value(transition.next_features, transition.next_joint_action)
    return transition.reward + gamma * bootstrap - critic.value(transition.features, transition.joint_action)


def td_update_critic(critic, transition, gamma, learning_rate, label=""):
    """
    Semi-gradient TD step: params <- params + lr * delta * grad Q(s, a).

    Returns:
        New QCritic; the target copy is refreshed every ``refresh_period`` updates
    """
    validate_discount(gamma)
    delta = td_error(critic, transition, gamma)
    grads = critic.gradient(transition.features, transition.joint_action) * delta
    params = network.sgd_step(critic.params, grads, learning_rate, Direction.ASCENT, label=f"{label} critic".strip())
    updates_done = critic.updates_done + 1
    target = params if updates_done % critic.refresh_period == 0 else critic.target_params
    return replace(critic, params=params, target_params=target, updates_done=updates_done)


def coma_advantage(critic, features, joint_action, agent_i, action_probs):
    """Q(s, a) - sum_b pi(b) Q(s, <a^-i, b>) with the other agents' actions fixed."""
    values = critic.values_for_agent(features, joint_action, agent_i)
    return float(values[joint_action[agent_i]] - np.asarray(action_probs) @ values)


def episode_transitions(trajectory, encode_state):
    """Transitions of an episode in time order; the last one is terminal."""
    features = [encode_state(record.state) for record in trajectory]
    steps = trajectory.steps
    transitions = []
    for t, record in enumerate(steps):
        if t + 1 < len(steps):
            transitions.append(
                Transition(features[t], record.joint_action, record.reward, features[t + 1], steps[t + 1].joint_action)
            )
        else:
            transitions.append(Transition(features[t], record.joint_action, record.reward))
    return transitions
