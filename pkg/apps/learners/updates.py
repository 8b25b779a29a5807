"""
Episode-level update procedures for the six algorithms.

Every procedure is a pure function of (trajectory, current parameters): the
policy targets are computed with the critic / reward-network parameters as
they stood when the episode started, and the policies take one ascent step
per episode with their summed step gradients. Critics and reward networks
then learn from every step of the episode in time order.
"""
import numpy as np

from apps.approximator.network import Gradients
from apps.envs.base import STAY

from .critics import coma_advantage, episode_transitions, td_update_critic
from .returns import difference_returns, discount_powers, discounted_suffix_sums, returns


def policy_gradients(trajectory, joint_policy, weights):
    """
    Per-agent sum over steps of ``weights[i, t] * grad log pi_i(a_t^i | o_t^i)``.

    Args:
        trajectory: Trajectory of one episode
        joint_policy: JointPolicy the episode was collected with
        weights: Array of shape (N, T)
    """
    weights = np.asarray(weights, dtype=np.float64)
    gradients = []
    for agent_i, policy in enumerate(joint_policy):
        total = Gradients.zeros_like(policy.params)
        for t, record in enumerate(trajectory):
            weight = weights[agent_i, t]
            if weight == 0.0:
                continue
            grad = policy.grad_log_prob(record.observations[agent_i], record.joint_action[agent_i])
            total = total + grad * weight
        gradients.append(total)
    return gradients


def _ascend(trajectory, joint_policy, weights, learning_rate, label):
    gradients = policy_gradients(trajectory, joint_policy, weights)
    return joint_policy.apply_gradients(gradients, learning_rate, label=label)


def reinforce_update(trajectory, joint_policy, gamma, learning_rate, label=""):
    """Independent REINFORCE: every agent is weighted by gamma^t * G_t of the shared reward."""
    shared = discount_powers(len(trajectory), gamma) * returns(trajectory.rewards, gamma).values
    weights = np.tile(shared, (joint_policy.n_agents, 1))
    return _ascend(trajectory, joint_policy, weights, learning_rate, label)


def dr_reinforce_update(trajectory, joint_policy, gamma, learning_rate, reward_fn, label=""):
    """Dr.Reinforce: agent i is weighted by gamma^t * (difference return of agent i)_t."""
    difference = difference_returns(trajectory, joint_policy, reward_fn, gamma).per_agent
    weights = discount_powers(len(trajectory), gamma)[None, :] * difference
    return _ascend(trajectory, joint_policy, weights, learning_rate, label)


def dr_reinforce_r_update(trajectory, joint_policy, reward_net, gamma, policy_lr, reward_lr, encode_state, label=""):
    """
    Dr.ReinforceR: Dr.Reinforce with difference rewards estimated by the
    reward network, followed by one regression step per episode step.

    Returns:
        (JointPolicy, RewardNetwork)
    """
    joint_policy_next = dr_reinforce_update(
        trajectory, joint_policy, gamma, policy_lr, reward_net.as_reward_fn(encode_state), label=label
    )
    for record in trajectory:
        reward_net = reward_net.regress_step(
            encode_state(record.state), record.joint_action, record.reward, reward_lr, label=label
        )
    return joint_policy_next, reward_net


def _train_critic(trajectory, critic, gamma, critic_lr, encode_state, label):
    for transition in episode_transitions(trajectory, encode_state):
        critic = td_update_critic(critic, transition, gamma, critic_lr, label=label)
    return critic


def coma_update(trajectory, joint_policy, critic, gamma, policy_lr, critic_lr, encode_state, label=""):
    """
    COMA: policies follow gamma^t * counterfactual advantage; the critic is
    trained by TD on the same episode.

    Returns:
        (JointPolicy, QCritic)
    """
    discounts = discount_powers(len(trajectory), gamma)
    weights = np.zeros((joint_policy.n_agents, len(trajectory)))
    for t, record in enumerate(trajectory):
        features = encode_state(record.state)
        for agent_i, policy in enumerate(joint_policy):
            probs = policy.action_distribution(record.observations[agent_i])
            advantage = coma_advantage(critic, features, record.joint_action, agent_i, probs)
            weights[agent_i, t] = discounts[t] * advantage
    joint_policy_next = _ascend(trajectory, joint_policy, weights, policy_lr, label)
    return joint_policy_next, _train_critic(trajectory, critic, gamma, critic_lr, encode_state, label)


def q_a2c_update(trajectory, joint_policy, critic, gamma, policy_lr, critic_lr, encode_state, label=""):
    """
    Q-A2C: decentralized actors weighted by gamma^t * Q(s_t, a_t) of a
    centralized critic, without a counterfactual baseline.

    Returns:
        (JointPolicy, QCritic)
    """
    discounts = discount_powers(len(trajectory), gamma)
    q_values = np.array([critic.value(encode_state(r.state), r.joint_action) for r in trajectory])
    weights = np.tile(discounts * q_values, (joint_policy.n_agents, 1))
    joint_policy_next = _ascend(trajectory, joint_policy, weights, policy_lr, label)
    return joint_policy_next, _train_critic(trajectory, critic, gamma, critic_lr, encode_state, label)


def colby_update(trajectory, joint_policy, local_reward_nets, gamma, policy_lr, reward_lr, encode_state,
                 default_action=STAY, label=""):
    """
    Local difference rewards with per-agent learned approximations
    local_reward_nets[i](s, a^i): the policy weight of agent i is the discounted suffix sum
    of r_t - local_reward_nets[i](s_t, c^i) with default action c^i, then every local net
    regresses r_t on (s_t, a_t^i).

    Returns:
        (JointPolicy, list of RewardNetwork)
    """
    n_steps = len(trajectory)
    features = [encode_state(record.state) for record in trajectory]
    rewards = trajectory.rewards
    deltas = np.zeros((joint_policy.n_agents, n_steps))
    for agent_i, net in enumerate(local_reward_nets):
        defaults = np.array([net.predict(f, (default_action,)) for f in features])
        deltas[agent_i] = rewards - defaults
    weights = discount_powers(n_steps, gamma)[None, :] * discounted_suffix_sums(deltas, gamma)
    joint_policy_next = _ascend(trajectory, joint_policy, weights, policy_lr, label)

    trained = []
    for agent_i, net in enumerate(local_reward_nets):
        for t, record in enumerate(trajectory):
            net = net.regress_step(features[t], (record.joint_action[agent_i],), record.reward, reward_lr, label=label)
        trained.append(net)
    return joint_policy_next, trained
