"""
Stateful learners wrapping the pure update procedures, one per algorithm.
"""
from django.db import models
from django.utils.translation import gettext_lazy as _

from apps.approximator import network
from apps.core.exceptions import ConfigurationError
from apps.policy.agents import DEFAULT_POLICY_HIDDEN, init_joint_policy
from apps.reward_model.network import DEFAULT_REWARD_HIDDEN, init_reward_network

from . import updates
from .critics import DEFAULT_CRITIC_HIDDEN, DEFAULT_TARGET_REFRESH, init_critic


class Algorithm(models.TextChoices):
    REINFORCE = "reinforce", _("REINFORCE")
    DR_REINFORCE = "dr_reinforce", _("Dr.Reinforce")
    DR_REINFORCE_R = "dr_reinforce_r", _("Dr.ReinforceR")
    COMA = "coma", _("COMA")
    Q_A2C = "q_a2c", _("Q-A2C")
    COLBY = "colby", _("Colby")


class Learner:
    """
    Owns the parameters of one training run.

    Args:
        env: GridWorld the run trains on
        rng: Generator used for parameter initialization
        gamma: Discount factor
        policy_lr: Policy learning rate
        critic_lr: Critic / reward-network learning rate (unused by critic-free methods)
    """

    algorithm = None
    uses_critic_lr = False

    def __init__(self, env, rng, gamma, policy_lr, critic_lr=None, policy_hidden=DEFAULT_POLICY_HIDDEN,
                 critic_hidden=DEFAULT_CRITIC_HIDDEN, target_refresh=DEFAULT_TARGET_REFRESH, label=""):
        if self.uses_critic_lr and critic_lr is None:
            raise ConfigurationError(f"{self.algorithm} needs a critic/reward learning rate")
        self.env = env
        self.gamma = gamma
        self.policy_lr = policy_lr
        self.critic_lr = critic_lr
        self.label = label
        self.joint_policy = init_joint_policy(
            env.n_agents, env.observation_size, rng, hidden_size=policy_hidden, n_actions=env.n_actions
        )

    def update(self, trajectory):
        raise NotImplementedError

    def snapshot(self):
        """Binary parameter records keyed by network name."""
        return {"policies": self.joint_policy.to_bytes()}


class ReinforceLearner(Learner):
    algorithm = Algorithm.REINFORCE

    def update(self, trajectory):
        self.joint_policy = updates.reinforce_update(
            trajectory, self.joint_policy, self.gamma, self.policy_lr, label=self.label
        )


class DrReinforceLearner(Learner):
    algorithm = Algorithm.DR_REINFORCE

    def update(self, trajectory):
        self.joint_policy = updates.dr_reinforce_update(
            trajectory, self.joint_policy, self.gamma, self.policy_lr, self.env.exact_reward, label=self.label
        )


class DrReinforceRLearner(Learner):
    algorithm = Algorithm.DR_REINFORCE_R
    uses_critic_lr = True

    def __init__(self, env, rng, gamma, policy_lr, critic_lr=None, critic_hidden=DEFAULT_REWARD_HIDDEN, **kwargs):
        super().__init__(env, rng, gamma, policy_lr, critic_lr, critic_hidden=critic_hidden, **kwargs)
        self.reward_net = init_reward_network(
            env.state_size, env.n_agents, rng, hidden_size=critic_hidden, n_actions=env.n_actions
        )

    def update(self, trajectory):
        self.joint_policy, self.reward_net = updates.dr_reinforce_r_update(
            trajectory, self.joint_policy, self.reward_net, self.gamma, self.policy_lr, self.critic_lr,
            self.env.encode_state, label=self.label,
        )

    def snapshot(self):
        return {**super().snapshot(), "reward_net": network.to_bytes(self.reward_net.params)}


class _CriticLearner(Learner):
    uses_critic_lr = True
    update_fn = None

    def __init__(self, env, rng, gamma, policy_lr, critic_lr=None, critic_hidden=DEFAULT_CRITIC_HIDDEN,
                 target_refresh=DEFAULT_TARGET_REFRESH, **kwargs):
        super().__init__(env, rng, gamma, policy_lr, critic_lr, critic_hidden=critic_hidden,
                         target_refresh=target_refresh, **kwargs)
        self.critic = init_critic(
            env.state_size, env.n_agents, rng, hidden_size=critic_hidden, n_actions=env.n_actions,
            refresh_period=target_refresh,
        )

    def update(self, trajectory):
        self.joint_policy, self.critic = type(self).update_fn(
            trajectory, self.joint_policy, self.critic, self.gamma, self.policy_lr, self.critic_lr,
            self.env.encode_state, label=self.label,
        )

    def snapshot(self):
        return {**super().snapshot(), "critic": network.to_bytes(self.critic.params)}


class ComaLearner(_CriticLearner):
    algorithm = Algorithm.COMA
    update_fn = staticmethod(updates.coma_update)


class QA2CLearner(_CriticLearner):
    algorithm = Algorithm.Q_A2C
    update_fn = staticmethod(updates.q_a2c_update)


class ColbyLearner(Learner):
    algorithm = Algorithm.COLBY
    uses_critic_lr = True

    def __init__(self, env, rng, gamma, policy_lr, critic_lr=None, critic_hidden=DEFAULT_REWARD_HIDDEN, **kwargs):
        super().__init__(env, rng, gamma, policy_lr, critic_lr, critic_hidden=critic_hidden, **kwargs)
        self.local_reward_nets = [
            init_reward_network(env.state_size, 1, rng, hidden_size=critic_hidden, n_actions=env.n_actions)
            for _ in range(env.n_agents)
        ]

    def update(self, trajectory):
        self.joint_policy, self.local_reward_nets = updates.colby_update(
            trajectory, self.joint_policy, self.local_reward_nets, self.gamma, self.policy_lr, self.critic_lr,
            self.env.encode_state, label=self.label,
        )

    def snapshot(self):
        snapshot = super().snapshot()
        for agent_i, net in enumerate(self.local_reward_nets):
            snapshot[f"local_reward_net_{agent_i}"] = network.to_bytes(net.params)
        return snapshot


ALGORITHMS = {
    learner.algorithm: learner
    for learner in (
        ReinforceLearner,
        DrReinforceLearner,
        DrReinforceRLearner,
        ComaLearner,
        QA2CLearner,
        ColbyLearner,
    )
}


def build_learner(algorithm, env, rng, **kwargs):
    """Instantiate the learner registered for ``algorithm``."""
    try:
        learner_class = ALGORITHMS[Algorithm(algorithm)]
    except ValueError:
        raise ConfigurationError(
            f"unknown algorithm {algorithm!r}; choose one of {', '.join(Algorithm.values)}"
        ) from None
    return learner_class(env, rng, **kwargs)
