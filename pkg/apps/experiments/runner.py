"""
Seeded training runs.

Every seed builds its own environment, parameters and generator from
``(master_seed, seed)``, so seeds can run in any order or in parallel and
the results depend only on the configuration.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.core.exceptions import ContractViolation, InsufficientDataError, NumericalDivergenceError
from apps.core.utils import derive_rng
from apps.envs.registry import make_env
from apps.learners.registry import build_learner
from apps.learners.rollout import run_episode

logger = logging.getLogger(__name__)

LOG_EVERY = 1000


class SeedStatus:
    COMPLETED = "completed"
    DIVERGED = "diverged"


@dataclass
class SeedResult:
    """Per-episode team rewards of one seed and how the seed ended."""

    seed: int
    rewards: list
    status: str = SeedStatus.COMPLETED
    diagnostic: str = ""

    @property
    def completed(self):
        return self.status == SeedStatus.COMPLETED

    def to_dict(self):
        return {
            "seed": self.seed,
            "rewards": [float(r) for r in self.rewards],
            "status": self.status,
            "diagnostic": self.diagnostic,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True, eq=False)
class LearningCurve:
    """Per-seed per-episode undiscounted team reward, shape (n_seeds, n_episodes)."""

    seeds: tuple
    rewards: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        rewards = np.asarray(self.rewards, dtype=np.float64)
        if rewards.ndim != 2 or rewards.shape[0] != len(self.seeds):
            raise ContractViolation(
                f"learning curve needs one equal-length reward vector per seed, got shape {rewards.shape}"
            )
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def n_seeds(self):
        return len(self.seeds)

    @property
    def n_episodes(self):
        return self.rewards.shape[1]

    @property
    def episodes(self):
        return np.arange(self.n_episodes)

    def final_decile_mean(self):
        """Mean reward over the last 10% of episodes (at least one), across seeds."""
        if self.n_seeds == 0:
            raise InsufficientDataError("no completed seeds")
        tail = max(1, self.n_episodes // 10)
        return float(self.rewards[:, -tail:].mean())

    def first_decile_mean(self):
        if self.n_seeds == 0:
            raise InsufficientDataError("no completed seeds")
        head = max(1, self.n_episodes // 10)
        return float(self.rewards[:, :head].mean())


@dataclass
class RunOutcome:
    """Completed seeds as a LearningCurve plus the seeds that diverged."""

    config: object
    curve: LearningCurve
    failures: list = field(default_factory=list)

    @property
    def failed_seeds(self):
        return [result.seed for result in self.failures]


def seed_label(config, seed):
    return f"{config.algorithm}/{config.env}/N{config.n_agents}/seed{seed}"


def snapshot_dir(config, seed):
    return Path(config.output_dir) / "snapshots" / f"seed_{seed}"


def write_snapshots(config, seed, learner):
    directory = snapshot_dir(config, seed)
    directory.mkdir(parents=True, exist_ok=True)
    for name, data in learner.snapshot().items():
        (directory / f"{name}.bin").write_bytes(data)
    logger.info(f"{seed_label(config, seed)}: parameter snapshots written to {directory}")


def train_learner(config, seed, log_every=LOG_EVERY):
    """
    Train one seed and return the learner with its per-episode rewards.

    Raises:
        NumericalDivergenceError when a network diverges
    """
    label = seed_label(config, seed)
    env = make_env(config.env, config.n_agents)
    rng = derive_rng(config.master_seed, seed)
    learner = build_learner(config.algorithm, env, rng, label=label, **config.learner_kwargs())
    rewards = []
    for episode in range(config.n_episodes):
        trajectory = run_episode(env, learner.joint_policy, rng, config.horizon)
        rewards.append(trajectory.total_reward)
        learner.update(trajectory)
        if log_every and (episode + 1) % log_every == 0:
            window = rewards[-log_every:]
            logger.debug(f"{label}: episode {episode + 1}/{config.n_episodes}, mean reward {np.mean(window):.4f}")
    return learner, rewards


def train_seed(config, seed, snapshots=False, log_every=LOG_EVERY):
    """
    Train one seed of ``config`` (already resolved).

    A diverged seed is reported in the result instead of raising, so the other
    seeds of the run carry on.
    """
    label = seed_label(config, seed)
    logger.info(f"{label}: training for {config.n_episodes} episodes")
    try:
        learner, rewards = train_learner(config, seed, log_every=log_every)
    except NumericalDivergenceError as exc:
        logger.error(f"{label}: diverged", exc_info=True)
        return SeedResult(seed=seed, rewards=[], status=SeedStatus.DIVERGED, diagnostic=str(exc))
    if snapshots:
        write_snapshots(config, seed, learner)
    logger.info(f"{label}: done, final-decile mean reward {np.mean(rewards[-max(1, len(rewards) // 10):]):.4f}")
    return SeedResult(seed=seed, rewards=rewards)


def run(config, snapshots=False):
    """
    Train every seed of ``config`` and collect the learning curve.

    Seeds are dispatched as a Celery group (in-process when tasks run
    eagerly or the broker is down) and reduced in seed-list order.

    Returns:
        RunOutcome
    """
    from .tasks import train_seed_task
    from .utils import safe_group_execute

    config = config.resolved()
    data = config.to_dict()
    results = [
        SeedResult.from_dict(item)
        for item in safe_group_execute(train_seed_task, [(data, seed, snapshots) for seed in config.seeds])
    ]
    completed = [result for result in results if result.completed]
    failures = [result for result in results if not result.completed]
    rewards = np.array([result.rewards for result in completed], dtype=np.float64).reshape(
        len(completed), config.n_episodes
    )
    curve = LearningCurve(
        seeds=tuple(result.seed for result in completed),
        rewards=rewards,
        label={"env": config.env, "algorithm": config.algorithm, "n_agents": config.n_agents},
    )
    if failures:
        logger.warning(f"{len(failures)} of {len(results)} seeds diverged: {[r.seed for r in failures]}")
    return RunOutcome(config=config, curve=curve, failures=failures)
