"""
Reward network regressing the team reward from (state encoding, actions).

The same class serves the centralized reward model of Dr.ReinforceR (one
one-hot block per agent) and the per-agent local approximations of the
Colby baseline (a single one-hot block).
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from apps.approximator import network
from apps.approximator.network import Direction
from apps.core.exceptions import InsufficientDataError
from apps.envs.base import N_ACTIONS
from apps.learners.critics import state_action_input
from apps.learners.returns import aristocrat_difference

logger = logging.getLogger(__name__)

DEFAULT_REWARD_HIDDEN = 256


@dataclass(frozen=True, eq=False)
class RewardNetwork:
    """Scalar regression model over state encoding + one-hot action blocks."""

    params: network.MlpParams
    n_agents: int
    n_actions: int = N_ACTIONS

    def _input(self, features, actions):
        return state_action_input(features, actions, self.n_actions)

    def predict(self, features, joint_action):
        return float(network.forward(self.params, self._input(features, joint_action))[0])

    def loss(self, features, joint_action, observed_reward):
        """0.5 * (r - R(s, a))^2"""
        return 0.5 * (observed_reward - self.predict(features, joint_action)) ** 2

    def regress_step(self, features, joint_action, observed_reward, learning_rate, label=""):
        """One gradient-descent step on the squared loss of a single sample."""
        x = self._input(features, joint_action)
        residual = float(network.forward(self.params, x)[0]) - observed_reward
        grads = network.backward(self.params, x, np.array([residual]))
        params = network.sgd_step(
            self.params, grads, learning_rate, Direction.DESCENT, label=f"{label} reward net".strip()
        )
        return replace(self, params=params)

    def as_reward_fn(self, encode_state):
        """Adapter to the (state, joint_action) -> float reward-function signature."""

        def reward_fn(state, joint_action):
            return self.predict(encode_state(state), joint_action)

        return reward_fn


def init_reward_network(state_size, n_agents, rng, hidden_size=DEFAULT_REWARD_HIDDEN, n_actions=N_ACTIONS):
    params = network.init_params(state_size + n_agents * n_actions, hidden_size, 1, rng)
    return RewardNetwork(params=params, n_agents=n_agents, n_actions=n_actions)


def estimated_difference_reward(reward_net, features, joint_action, observed_reward, agent_i, action_probs):
    """
    r_t - sum_b pi(b) reward_net(s_t, <b, a^-i_t>).

    The minuend is the reward observed from the environment, not the
    network's own prediction.
    """
    return aristocrat_difference(
        features,
        joint_action,
        agent_i,
        action_probs,
        reward_net.predict,
        observed_reward=observed_reward,
    )


def dataset_mse(reward_net, samples):
    """Mean squared error over (features, joint_action, reward) samples."""
    if not samples:
        raise InsufficientDataError("cannot evaluate a reward network on an empty dataset")
    errors = [reward_net.predict(f, a) - r for f, a, r in samples]
    return float(np.mean(np.square(errors)))


def fit(reward_net, samples, learning_rate, epochs, rng=None):
    """
    Per-sample SGD over a frozen dataset.

    Args:
        reward_net: Starting RewardNetwork
        samples: List of (features, joint_action, reward)
        learning_rate: Step size
        epochs: Passes over the data
        rng: Optional Generator; when given the sample order is shuffled each epoch

    Returns:
        (fitted RewardNetwork, list of dataset MSE after every epoch)
    """
    if not samples:
        raise InsufficientDataError("cannot fit a reward network on an empty dataset")
    history = []
    order = np.arange(len(samples))
    for epoch in range(epochs):
        if rng is not None:
            rng.shuffle(order)
        for index in order:
            features, joint_action, reward = samples[index]
            reward_net = reward_net.regress_step(features, joint_action, reward, learning_rate)
        history.append(dataset_mse(reward_net, samples))
        logger.debug(f"reward fit epoch {epoch + 1}/{epochs}: mse={history[-1]:.6g}")
    return reward_net, history
