"""
Episode collection.
"""
from apps.envs.base import StepRecord, Trajectory, validate_joint_action


def run_episode(env, joint_policy, rng, horizon, start_state=None, first_action=None):
    """
    Roll out one episode of at most ``horizon`` steps.

    Args:
        env: GridWorld
        joint_policy: JointPolicy used to pick actions
        rng: Generator shared by action sampling and the environment
        horizon: Number of steps
        start_state: Optional initial state; a uniform random reset otherwise
        first_action: Optional joint action forced at the first step

    Returns:
        Trajectory
    """
    state = env.random_state(rng) if start_state is None else start_state
    trajectory = Trajectory()
    for t in range(horizon):
        observations = env.observe_all(state)
        if t == 0 and first_action is not None:
            joint_action = validate_joint_action(first_action, env.n_agents)
        else:
            joint_action = joint_policy.sample(observations, rng)
        next_state, reward = env.step(state, joint_action, rng)
        trajectory.append(StepRecord(state, observations, joint_action, reward))
        state = next_state
    return trajectory
