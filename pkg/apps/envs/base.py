"""
Core types and the shared gridworld machinery for multi-agent environments.

A ``GridWorld`` is stateless: every operation takes a ``GridState`` and returns
new values, so one instance can be shared between threads and the reward
function can be queried counterfactually at will.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from apps.core.exceptions import ConfigurationError, ContractViolation
from apps.core.utils import make_rng
from apps.core.validators import validate_n_agents

GRID_WIDTH = 10
GRID_HEIGHT = 10

# Local action codes
UP, DOWN, LEFT, RIGHT, STAY = range(5)
N_ACTIONS = 5
ACTION_NAMES = ("up", "down", "left", "right", "stay")
ACTION_DELTAS = np.array(
    [
        (-1, 0),  # up
        (1, 0),  # down
        (0, -1),  # left
        (0, 1),  # right
        (0, 0),  # stay
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class GridState:
    """Full environment state: agent cells, landmark/prey cells and step counter."""

    agent_cells: tuple
    entity_cells: tuple
    step: int = 0
    width: int = GRID_WIDTH
    height: int = GRID_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "agent_cells", tuple((int(r), int(c)) for r, c in self.agent_cells))
        object.__setattr__(self, "entity_cells", tuple((int(r), int(c)) for r, c in self.entity_cells))
        if self.step < 0:
            raise ContractViolation(f"step counter must be non-negative, got {self.step}")
        for row, col in self.agent_cells + self.entity_cells:
            if not (0 <= row < self.height and 0 <= col < self.width):
                raise ContractViolation(
                    f"cell ({row}, {col}) lies outside the {self.height}x{self.width} grid"
                )

    @property
    def n_agents(self):
        return len(self.agent_cells)

    def agent_array(self):
        return np.asarray(self.agent_cells, dtype=np.int64).reshape(-1, 2)

    def entity_array(self):
        return np.asarray(self.entity_cells, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class StepRecord:
    """One step of an episode."""

    state: object
    observations: tuple
    joint_action: tuple
    reward: float


@dataclass
class Trajectory:
    """One episode, in time order."""

    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def append(self, record):
        self.steps.append(record)

    @property
    def rewards(self):
        return np.array([record.reward for record in self.steps], dtype=np.float64)

    @property
    def total_reward(self):
        """Undiscounted sum of the shared reward."""
        return float(self.rewards.sum())


def validate_joint_action(joint_action, n_agents, n_actions=N_ACTIONS):
    """
    Check a joint action and return it as a tuple of ints.

    Raises:
        ContractViolation if the length or any action code is invalid
    """
    joint_action = tuple(int(a) for a in joint_action)
    if len(joint_action) != n_agents:
        raise ContractViolation(f"joint action has {len(joint_action)} entries, expected {n_agents}")
    for action in joint_action:
        if not 0 <= action < n_actions:
            raise ContractViolation(f"action {action} is not in [0, {n_actions})")
    return joint_action


def substitute_action(joint_action, agent_i, alt_action):
    """Joint action with agent ``agent_i``'s entry replaced by ``alt_action``."""
    joint_action = list(joint_action)
    joint_action[agent_i] = int(alt_action)
    return tuple(joint_action)


class GridWorld:
    """
    Shared machinery for the N-agent 10x10 gridworlds.

    Subclasses set ``kind`` and implement ``n_entities``, ``exact_reward``,
    ``reward_bounds`` and, when entities move, ``_move_entities``.
    """

    kind = None

    def __init__(self, n_agents, width=GRID_WIDTH, height=GRID_HEIGHT):
        validate_n_agents(n_agents)
        self.n_agents = n_agents
        self.width = width
        self.height = height
        if n_agents + self.n_entities > width * height:
            raise ConfigurationError(
                f"{n_agents} agents and {self.n_entities} entities do not fit in "
                f"{width * height} cells"
            )

    def __repr__(self):
        return f"{type(self).__name__}(n_agents={self.n_agents})"

    @property
    def n_entities(self):
        raise NotImplementedError

    @property
    def n_actions(self):
        return N_ACTIONS

    @property
    def observation_size(self):
        return 2 * (self.n_agents - 1) + 2 * self.n_entities

    @property
    def state_size(self):
        """Width of the state encoding used by critics and reward networks."""
        return 2 * (self.n_agents + self.n_entities)

    # -- state generation -------------------------------------------------

    def random_state(self, rng):
        """Place agents and entities uniformly without replacement; step = 0."""
        n_cells = self.width * self.height
        picks = rng.choice(n_cells, size=self.n_agents + self.n_entities, replace=False)
        cells = [(int(k) // self.width, int(k) % self.width) for k in picks]
        return GridState(
            agent_cells=cells[: self.n_agents],
            entity_cells=cells[self.n_agents :],
            step=0,
            width=self.width,
            height=self.height,
        )

    def reset(self, rng_seed):
        """Deterministic random reset from a seed."""
        return self.random_state(make_rng(rng_seed))

    # -- dynamics ---------------------------------------------------------

    def move(self, cells, actions):
        """Move cells by action codes, clamping at the boundary."""
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        moved = cells + ACTION_DELTAS[np.asarray(actions, dtype=np.int64)]
        moved[:, 0] = np.clip(moved[:, 0], 0, self.height - 1)
        moved[:, 1] = np.clip(moved[:, 1], 0, self.width - 1)
        return moved

    def next_agent_cells(self, state, joint_action):
        return self.move(state.agent_array(), joint_action)

    def _move_entities(self, state, rng):
        return state.entity_cells

    def step(self, state, joint_action, rng):
        """
        Advance one step.

        Args:
            state: Current GridState
            joint_action: One action code per agent
            rng: numpy Generator for stochastic entity moves

        Returns:
            (next_state, reward) where reward = exact_reward(state, joint_action)
        """
        joint_action = validate_joint_action(joint_action, self.n_agents)
        reward = self.exact_reward(state, joint_action)
        next_state = replace(
            state,
            agent_cells=tuple(map(tuple, self.next_agent_cells(state, joint_action))),
            entity_cells=self._move_entities(state, rng),
            step=state.step + 1,
        )
        return next_state, reward

    # -- rewards ----------------------------------------------------------

    def exact_reward(self, state, joint_action):
        raise NotImplementedError

    def counterfactual_reward(self, state, joint_action, agent_i, alt_action):
        """exact_reward with agent ``agent_i``'s action replaced by ``alt_action``."""
        if not 0 <= agent_i < self.n_agents:
            raise ContractViolation(f"agent index {agent_i} out of range for {self.n_agents} agents")
        return self.exact_reward(state, substitute_action(joint_action, agent_i, alt_action))

    def reward_bounds(self):
        raise NotImplementedError

    # -- observations and encodings -------------------------------------

    def observe(self, state, agent_i):
        """
        Relative offsets from agent ``agent_i`` to every other agent (ascending
        index) then every entity, each divided by the grid width.
        """
        if not 0 <= agent_i < state.n_agents:
            raise ContractViolation(f"agent index {agent_i} out of range for {state.n_agents} agents")
        agents = state.agent_array()
        others = np.delete(agents, agent_i, axis=0)
        targets = np.concatenate([others, state.entity_array()], axis=0)
        offsets = (targets - agents[agent_i]).astype(np.float64) / state.width
        return offsets.reshape(-1)

    def observe_all(self, state):
        return tuple(self.observe(state, i) for i in range(state.n_agents))

    def encode_state(self, state):
        """Agent cells then entity cells, each coordinate divided by the grid width."""
        cells = np.concatenate([state.agent_array(), state.entity_array()], axis=0)
        return cells.astype(np.float64).reshape(-1) / state.width
