"""
Predator-prey domain: N predators keep a randomly moving prey in sight.
"""
import numpy as np

from .base import N_ACTIONS, GridWorld, validate_joint_action

SIGHT_RANGE = 1
TEAM_BONUS = 1.0


class PredatorPrey(GridWorld):
    """
    Sparse-reward pursuit task.

    The team receives ``TEAM_BONUS`` when at least one predator, after moving,
    is within Chebyshev distance ``SIGHT_RANGE`` of the prey's current cell.
    The prey then moves by a uniformly random action.
    """

    kind = "predator_prey"

    @property
    def n_entities(self):
        return 1

    def exact_reward(self, state, joint_action):
        joint_action = validate_joint_action(joint_action, self.n_agents)
        predators = self.next_agent_cells(state, joint_action)
        prey = state.entity_array()[0]
        chebyshev = np.abs(predators - prey).max(axis=1)
        return TEAM_BONUS if bool((chebyshev <= SIGHT_RANGE).any()) else 0.0

    def _move_entities(self, state, rng):
        prey_action = int(rng.integers(N_ACTIONS))
        moved = self.move(state.entity_array(), [prey_action])
        return tuple(map(tuple, moved))

    def reward_bounds(self):
        return (0.0, TEAM_BONUS)
