"""
Multi-rover domain: N rovers spread over N landmarks.
"""
from collections import Counter

import numpy as np

from .base import GridWorld, validate_joint_action

COLLISION_PENALTY = 0.5


def count_collisions(cells):
    """Number of agent pairs sharing a cell."""
    counts = Counter(map(tuple, np.asarray(cells).tolist()))
    return sum(c * (c - 1) // 2 for c in counts.values())


class MultiRover(GridWorld):
    """
    Dense-reward coverage task.

    The team reward is the negative sum, over landmarks, of the Manhattan
    distance to the closest rover after moving, scaled by 1/(width + height),
    minus 0.5 for every pair of rovers landing on the same cell. Colliding
    moves still happen.
    """

    kind = "multi_rover"

    @property
    def n_entities(self):
        return self.n_agents

    def exact_reward(self, state, joint_action):
        joint_action = validate_joint_action(joint_action, self.n_agents)
        agents = self.next_agent_cells(state, joint_action)
        landmarks = state.entity_array()
        distances = np.abs(landmarks[:, None, :] - agents[None, :, :]).sum(axis=-1)
        coverage = distances.min(axis=1).sum() / (state.width + state.height)
        return float(-coverage - COLLISION_PENALTY * count_collisions(agents))

    def reward_bounds(self):
        n = self.n_agents
        span = self.width + self.height
        worst_distance = n / span * (span - 2)
        worst_collisions = COLLISION_PENALTY * n * (n - 1) / 2
        return (-(worst_distance + worst_collisions), 0.0)
