import numpy as np
import pytest
from scipy.stats import chisquare

from apps.core.exceptions import ConfigurationError, ContractViolation
from apps.core.utils import make_rng
from apps.envs.base import DOWN, LEFT, RIGHT, STAY, UP, GridState
from apps.envs.multi_rover import MultiRover, count_collisions
from apps.envs.predator_prey import PredatorPrey
from apps.envs.registry import EnvKind, make_env, reset


class TestReset:
    def test_multi_rover_cells_are_distinct(self):
        state = reset(EnvKind.MULTI_ROVER, 3, 7)
        cells = state.agent_cells + state.entity_cells
        assert len(state.agent_cells) == 3
        assert len(state.entity_cells) == 3
        assert len(set(cells)) == 6
        assert state.step == 0

    def test_predator_prey_has_one_prey(self):
        state = reset(EnvKind.PREDATOR_PREY, 3, 7)
        assert len(state.agent_cells) == 3
        assert len(state.entity_cells) == 1

    def test_reset_is_deterministic(self):
        assert reset("multi_rover", 3, 2**63 + 5) == reset("multi_rover", 3, 2**63 + 5)

    def test_too_many_entities(self):
        with pytest.raises(ConfigurationError):
            make_env(EnvKind.MULTI_ROVER, 51)

    def test_unknown_environment(self):
        with pytest.raises(ConfigurationError):
            make_env("gridball", 3)

    def test_team_of_one_is_rejected(self):
        with pytest.raises(ConfigurationError):
            make_env(EnvKind.PREDATOR_PREY, 1)

    def test_cells_are_uniform_over_seeds(self):
        env = make_env(EnvKind.PREDATOR_PREY, 2)
        counts = np.zeros(100)
        for seed in range(10_000):
            state = env.reset(seed)
            row, col = state.entity_cells[0]
            counts[row * 10 + col] += 1
        assert chisquare(counts).pvalue > 0.001


class TestGridState:
    def test_out_of_bounds_cell(self):
        with pytest.raises(ContractViolation):
            GridState(agent_cells=((10, 0), (0, 0)), entity_cells=((1, 1),))


class TestStep:
    def test_clamped_at_boundary(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((0, 0), (5, 5)), entity_cells=((9, 9), (8, 8)))
        next_state, _ = env.step(state, (UP, STAY), make_rng(0))
        assert next_state.agent_cells[0] == (0, 0)
        next_state, _ = env.step(state, (LEFT, STAY), make_rng(0))
        assert next_state.agent_cells[0] == (0, 0)

    def test_moves(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((4, 4), (4, 4)), entity_cells=((0, 0), (1, 1)))
        next_state, _ = env.step(state, (DOWN, RIGHT), make_rng(0))
        assert next_state.agent_cells == ((5, 4), (4, 5))
        assert next_state.step == 1

    def test_all_stay_is_identity_and_reward_is_exact(self):
        env = MultiRover(3)
        state = env.reset(11)
        action = (STAY, STAY, STAY)
        next_state, reward = env.step(state, action, make_rng(0))
        assert next_state.agent_cells == state.agent_cells
        assert next_state.entity_cells == state.entity_cells
        assert reward == env.exact_reward(state, action)

    def test_prey_moves_reproducibly(self):
        env = PredatorPrey(3)
        state = env.reset(3)
        a, _ = env.step(state, (STAY,) * 3, make_rng(42))
        b, _ = env.step(state, (STAY,) * 3, make_rng(42))
        assert a.entity_cells == b.entity_cells

    def test_invalid_joint_action(self):
        env = MultiRover(2)
        state = env.reset(0)
        with pytest.raises(ContractViolation):
            env.step(state, (STAY,), make_rng(0))
        with pytest.raises(ContractViolation):
            env.step(state, (STAY, 5), make_rng(0))


class TestMultiRoverReward:
    def test_covered_landmarks_give_zero(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((2, 2), (7, 7)), entity_cells=((2, 2), (7, 7)))
        assert env.exact_reward(state, (STAY, STAY)) == 0.0

    def test_collision_penalty(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((3, 2), (3, 4)), entity_cells=((0, 0), (9, 9)))
        reward = env.exact_reward(state, (RIGHT, LEFT))
        # both rovers land on (3, 3): distances 6 and 12, one colliding pair
        assert reward == pytest.approx(-(6 + 12) / 20 - 0.5, abs=1e-12)

    def test_count_collisions(self):
        assert count_collisions([(1, 1), (1, 1), (1, 1), (2, 2)]) == 3
        assert count_collisions([(1, 1), (2, 2)]) == 0

    def test_reward_is_within_bounds(self):
        env = MultiRover(4)
        low, high = env.reward_bounds()
        rng = make_rng(5)
        for _ in range(500):
            state = env.random_state(rng)
            action = tuple(int(a) for a in rng.integers(5, size=4))
            assert low <= env.exact_reward(state, action) <= high

    def test_reward_is_pure(self):
        env = MultiRover(3)
        state = env.reset(9)
        assert env.exact_reward(state, (0, 1, 2)) == env.exact_reward(state, (0, 1, 2))


class TestPredatorPreyReward:
    def test_far_predators_get_nothing(self):
        env = PredatorPrey(2)
        state = GridState(agent_cells=((0, 0), (0, 9)), entity_cells=((6, 5),))
        for action in range(5):
            assert env.exact_reward(state, (action, action)) == 0.0

    def test_adjacent_predator_scores(self):
        env = PredatorPrey(2)
        state = GridState(agent_cells=((4, 3), (0, 0)), entity_cells=((5, 5),))
        assert env.exact_reward(state, (RIGHT, STAY)) == 1.0
        assert env.exact_reward(state, (LEFT, STAY)) == 0.0

    def test_reward_is_binary(self):
        env = PredatorPrey(3)
        rng = make_rng(1)
        for _ in range(200):
            state = env.random_state(rng)
            action = tuple(int(a) for a in rng.integers(5, size=3))
            assert env.exact_reward(state, action) in (0.0, 1.0)


class TestCounterfactualReward:
    def test_identity_substitution(self):
        for env in (MultiRover(3), PredatorPrey(3)):
            state = env.reset(4)
            action = (UP, LEFT, STAY)
            for agent_i in range(3):
                assert env.counterfactual_reward(state, action, agent_i, action[agent_i]) == env.exact_reward(
                    state, action
                )

    def test_matches_brute_force(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((3, 3), (6, 1)), entity_cells=((0, 4), (8, 8)))
        for alt in range(5):
            assert env.counterfactual_reward(state, (STAY, UP), 0, alt) == env.exact_reward(state, (alt, UP))

    def test_agent_out_of_range(self):
        env = MultiRover(2)
        with pytest.raises(ContractViolation):
            env.counterfactual_reward(env.reset(0), (STAY, STAY), 2, STAY)


class TestObserve:
    def test_coincident_cells(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((5, 5), (5, 5)), entity_cells=((0, 0), (9, 9)))
        np.testing.assert_array_equal(env.observe(state, 0)[:2], [0.0, 0.0])

    def test_offsets_are_scaled(self):
        env = PredatorPrey(2)
        state = GridState(agent_cells=((0, 0), (1, 0)), entity_cells=((9, 9),))
        np.testing.assert_allclose(env.observe(state, 0), [0.1, 0.0, 0.9, 0.9])

    def test_order_follows_agent_indices(self):
        env = PredatorPrey(3)
        a = GridState(agent_cells=((0, 0), (1, 1), (2, 3)), entity_cells=((9, 9),))
        b = GridState(agent_cells=((0, 0), (2, 3), (1, 1)), entity_cells=((9, 9),))
        obs_a, obs_b = env.observe(a, 0), env.observe(b, 0)
        np.testing.assert_array_equal(obs_a[:2], obs_b[2:4])
        np.testing.assert_array_equal(obs_a[2:4], obs_b[:2])

    def test_observation_size_and_range(self):
        env = MultiRover(3)
        state = env.reset(0)
        for agent_i in range(3):
            obs = env.observe(state, agent_i)
            assert obs.shape == (env.observation_size,)
            assert np.all(np.abs(obs) <= 1.0)

    def test_state_encoding(self):
        env = MultiRover(2)
        state = GridState(agent_cells=((1, 2), (3, 4)), entity_cells=((5, 6), (7, 8)))
        np.testing.assert_allclose(env.encode_state(state), np.arange(1, 9) / 10)
