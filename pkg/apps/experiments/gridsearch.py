"""
Learning-rate grid search at N = 3 with a reduced seed count.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ConfigurationError
from apps.learners.registry import ALGORITHMS, Algorithm

from .runner import SeedResult
from .tasks import train_seed_task
from .utils import safe_group_execute

logger = logging.getLogger(__name__)

GRIDSEARCH_AGENTS = 3
GRIDSEARCH_SEEDS = 3
STANDARD_RATES = (5e-5, 1e-4, 5e-4, 25e-4, 5e-3, 25e-3)


@dataclass(frozen=True)
class GridCell:
    policy_lr: float
    critic_lr: float
    score: float
    diverged_seeds: tuple = ()

    @property
    def diverged(self):
        return bool(self.diverged_seeds)


@dataclass(frozen=True)
class GridsearchResult:
    """Cells ranked best first; ``best`` is the winning (policy_lr, critic_lr)."""

    algorithm: str
    env: str
    cells: tuple

    @property
    def best(self):
        winner = self.cells[0]
        return winner.policy_lr, winner.critic_lr


def rate_grid(algorithm, policy_rates=STANDARD_RATES, critic_rates=STANDARD_RATES):
    """Every (policy_lr, critic_lr) pair; critic-free algorithms get ``None`` critic rates."""
    if ALGORITHMS[Algorithm(algorithm)].uses_critic_lr:
        return list(itertools.product(policy_rates, critic_rates))
    return [(rate, None) for rate in policy_rates]


def rank_cells(cells):
    """Best mean final-decile reward first; diverged cells last; ties go to the smaller policy rate."""
    return tuple(
        sorted(
            cells,
            key=lambda c: (-c.score if math.isfinite(c.score) else math.inf, c.policy_lr, c.critic_lr or 0.0),
        )
    )


def gridsearch(base_config, rates, n_seeds=GRIDSEARCH_SEEDS):
    """
    Train every rate pair of ``rates`` at N = 3 and rank the pairs.

    Args:
        base_config: RunConfig supplying environment, algorithm and budgets
        rates: Finite sequence of (policy_lr, critic_lr) pairs
        n_seeds: Seeds per cell, taken from the front of the base seed list

    Returns:
        GridsearchResult
    """
    rates = list(rates)
    if not rates:
        raise ConfigurationError("gridsearch needs at least one rate pair")
    seeds = tuple(base_config.seeds)[:n_seeds] if base_config.seeds else tuple(range(n_seeds))
    configs = [
        base_config.with_overrides(
            n_agents=GRIDSEARCH_AGENTS,
            seeds=seeds,
            policy_lr=policy_lr,
            critic_lr=critic_lr,
        ).resolved()
        for policy_lr, critic_lr in rates
    ]
    jobs = [(config.to_dict(), seed, False) for config in configs for seed in config.seeds]
    results = [SeedResult.from_dict(item) for item in safe_group_execute(train_seed_task, jobs)]

    cells = []
    for index, config in enumerate(configs):
        cell_results = results[index * len(seeds) : (index + 1) * len(seeds)]
        diverged = tuple(r.seed for r in cell_results if not r.completed)
        if diverged:
            score = -math.inf
        else:
            tail = max(1, config.n_episodes // 10)
            score = float(np.mean([np.mean(r.rewards[-tail:]) for r in cell_results]))
        cells.append(GridCell(config.policy_lr, config.critic_lr, score, diverged))
        logger.info(
            f"gridsearch {config.algorithm}/{config.env} policy_lr={config.policy_lr:g} "
            f"critic_lr={config.critic_lr}: score {score:.4f}"
        )
    return GridsearchResult(algorithm=configs[0].algorithm, env=configs[0].env, cells=rank_cells(cells))
