"""
Per-agent softmax policies over local actions and the joint policy of a team.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import log_softmax, softmax

from apps.approximator import network
from apps.approximator.network import Direction
from apps.core.exceptions import ContractViolation, NumericalDivergenceError

DEFAULT_POLICY_HIDDEN = 64

INDEX_DTYPE = np.dtype("<i8")


@dataclass(frozen=True, eq=False)
class AgentPolicy:
    """Categorical policy pi(a | observation) parameterized by an MLP."""

    params: network.MlpParams
    agent_index: int

    @property
    def n_actions(self):
        return self.params.output_size

    @property
    def observation_size(self):
        return self.params.input_size

    def logits(self, observation):
        logits = network.forward(self.params, observation)
        if not np.isfinite(logits).all():
            raise NumericalDivergenceError(
                "policy produced non-finite logits", label=f"agent {self.agent_index}"
            )
        return logits

    def action_distribution(self, observation):
        """Softmax of the network output (max-subtracted)."""
        return softmax(self.logits(observation))

    def log_prob(self, observation, action):
        return float(log_softmax(self.logits(observation))[action])

    def sample_action(self, observation, rng):
        probs = self.action_distribution(observation)
        return int(rng.choice(self.n_actions, p=probs))

    def grad_log_prob(self, observation, action):
        """
        Gradient of log pi(action | observation) w.r.t. the parameters.

        Pushes the softmax cross-entropy cotangent (one-hot minus
        probabilities) through the network's backward pass.
        """
        if not 0 <= action < self.n_actions:
            raise ContractViolation(f"action {action} is not in [0, {self.n_actions})")
        cotangent = -self.action_distribution(observation)
        cotangent[action] += 1.0
        return network.backward(self.params, observation, cotangent)

    def with_params(self, params):
        return replace(self, params=params)


def init_agent_policy(agent_index, observation_size, rng, hidden_size=DEFAULT_POLICY_HIDDEN, n_actions=5):
    params = network.init_params(observation_size, hidden_size, n_actions, rng)
    return AgentPolicy(params=params, agent_index=agent_index)


@dataclass(frozen=True, eq=False)
class JointPolicy:
    """The team's policies, agent i at position i."""

    policies: tuple

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        indices = [policy.agent_index for policy in self.policies]
        if indices != list(range(len(self.policies))):
            raise ContractViolation(f"agent indices must be 0..N-1 in order, got {indices}")

    def __len__(self):
        return len(self.policies)

    def __getitem__(self, agent_i):
        return self.policies[agent_i]

    def __iter__(self):
        return iter(self.policies)

    @property
    def n_agents(self):
        return len(self.policies)

    def distributions(self, observations):
        return [policy.action_distribution(obs) for policy, obs in zip(self.policies, observations)]

    def sample(self, observations, rng):
        """Joint action sampled agent by agent, in index order."""
        return tuple(policy.sample_action(obs, rng) for policy, obs in zip(self.policies, observations))

    def apply_gradients(self, gradients, learning_rate, label=""):
        """One ascent step per agent with that agent's summed gradient."""
        return JointPolicy(
            tuple(
                policy.with_params(
                    network.sgd_step(
                        policy.params,
                        grads,
                        learning_rate,
                        Direction.ASCENT,
                        label=f"{label} policy {policy.agent_index}".strip(),
                    )
                )
                for policy, grads in zip(self.policies, gradients)
            )
        )

    def to_bytes(self):
        """N, then the byte length of every agent record, then the records."""
        records = [network.to_bytes(policy.params) for policy in self.policies]
        header = np.array([len(records)] + [len(r) for r in records], dtype=INDEX_DTYPE)
        return header.tobytes() + b"".join(records)

    @classmethod
    def from_bytes(cls, data):
        n_agents = int(np.frombuffer(data, dtype=INDEX_DTYPE, count=1)[0])
        sizes = np.frombuffer(data, dtype=INDEX_DTYPE, count=n_agents, offset=INDEX_DTYPE.itemsize)
        offset = (n_agents + 1) * INDEX_DTYPE.itemsize
        policies = []
        for agent_i, size in enumerate(sizes):
            if network.record_size(data, offset) != size:
                raise ContractViolation(f"corrupt policy record {agent_i}: header says {int(size)} bytes")
            policies.append(AgentPolicy(network.from_bytes(data, offset), agent_i))
            offset += int(size)
        return cls(tuple(policies))


def init_joint_policy(n_agents, observation_size, rng, hidden_size=DEFAULT_POLICY_HIDDEN, n_actions=5):
    """Fresh independent policies for a team of ``n_agents``."""
    return JointPolicy(
        tuple(
            init_agent_policy(i, observation_size, rng, hidden_size=hidden_size, n_actions=n_actions)
            for i in range(n_agents)
        )
    )
