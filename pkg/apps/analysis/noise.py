"""
Robustness of aristocrat difference rewards to noisy counterfactual rewards.

Noise perturbs only the counterfactual reward values that form the baseline
term; the realized reward is never touched.
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _

from apps.core.exceptions import ConfigurationError, ContractViolation
from apps.core.utils import make_rng
from apps.core.validators import validate_positive, validate_probability
from apps.learners.returns import counterfactual_rewards

logger = logging.getLogger(__name__)

DEFAULT_NOISE_SAMPLES = 1000
DEFAULT_STATE_SAMPLES = 200
DEFAULT_RELATIVE_SCALE = 0.1
DEFAULT_MASK_PROBABILITY = 0.5
STUDIED_AGENT = 0


class NoiseKind(models.TextChoices):
    NORMAL = "normal", _("Additive normal")
    UNIFORM = "uniform", _("Additive uniform")
    MASKING = "masking", _("Masking")


@dataclass(frozen=True)
class NoiseProfile:
    """
    Noise process applied to counterfactual reward values.

    ``scale`` is the standard deviation (normal), the half-width (uniform)
    or the probability of replacing a value by zero (masking).
    """

    kind: str
    scale: float
    rng_seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", NoiseKind(self.kind))
        except ValueError:
            raise ConfigurationError(
                f"unknown noise kind {self.kind!r}; choose one of {', '.join(NoiseKind.values)}"
            ) from None
        validate_positive(self.scale, "noise scale")
        if self.kind == NoiseKind.MASKING:
            validate_probability(self.scale, "mask probability")

    @property
    def name(self):
        return f"{self.kind}:{self.scale:g}"

    def perturb(self, values, n_draws, rng):
        """
        ``n_draws`` independent noisy copies of ``values``.

        Returns:
            Array of shape (n_draws, len(values))
        """
        values = np.asarray(values, dtype=np.float64)
        shape = (n_draws, values.size)
        if self.kind == NoiseKind.NORMAL:
            return values + rng.normal(0.0, self.scale, size=shape)
        if self.kind == NoiseKind.UNIFORM:
            return values + rng.uniform(-self.scale, self.scale, size=shape)
        keep = rng.random(shape) >= self.scale
        return np.where(keep, values, 0.0)


def default_noise_profile(kind, env, rng_seed=0):
    """Normal / uniform scaled to 10% of the reward range; masking with p = 0.5."""
    if NoiseKind(kind) == NoiseKind.MASKING:
        return NoiseProfile(kind, DEFAULT_MASK_PROBABILITY, rng_seed)
    low, high = env.reward_bounds()
    return NoiseProfile(kind, DEFAULT_RELATIVE_SCALE * (high - low), rng_seed)


@dataclass(frozen=True)
class NoiseRow:
    """Outcome of the study on one sampled (state, joint_action)."""

    sample_id: int
    true_difference: float
    mean_noisy_difference: float
    variance: float
    n_noise_samples: int

    @property
    def bias(self):
        return self.mean_noisy_difference - self.true_difference

    @property
    def standard_error(self):
        return float(np.sqrt(self.variance / self.n_noise_samples))

    def significant(self, n_standard_errors=3.0):
        """True when the bias exceeds ``n_standard_errors`` standard errors."""
        return abs(self.bias) > n_standard_errors * self.standard_error


def noise_study(env, n_agents, noise_profile, n_noise_samples=DEFAULT_NOISE_SAMPLES,
                n_state_samples=DEFAULT_STATE_SAMPLES, rng=None):
    """
    Compare exact and noisy aristocrat difference rewards of agent 0 under a
    uniform policy.

    States and joint actions are drawn uniformly from ``rng``; noise draws come
    from a generator seeded with ``noise_profile.rng_seed``.

    Returns:
        List of NoiseRow, one per sampled (state, joint_action)
    """
    if n_agents != env.n_agents:
        raise ContractViolation(f"{env!r} has {env.n_agents} agents, asked for {n_agents}")
    if n_noise_samples < 2:
        raise ConfigurationError(f"n_noise_samples must be >= 2, got {n_noise_samples}")
    if rng is None:
        raise ContractViolation("noise_study needs a random generator")
    noise_rng = make_rng(noise_profile.rng_seed)
    probs = np.full(env.n_actions, 1.0 / env.n_actions)
    rows = []
    for sample_id in range(n_state_samples):
        state = env.random_state(rng)
        joint_action = tuple(int(a) for a in rng.integers(env.n_actions, size=n_agents))
        realized = env.exact_reward(state, joint_action)
        values = counterfactual_rewards(state, joint_action, STUDIED_AGENT, env.n_actions, env.exact_reward)
        noisy = realized - noise_profile.perturb(values, n_noise_samples, noise_rng) @ probs
        rows.append(
            NoiseRow(
                sample_id=sample_id,
                true_difference=float(realized - probs @ values),
                mean_noisy_difference=float(noisy.mean()),
                variance=float(noisy.var(ddof=1)),
                n_noise_samples=n_noise_samples,
            )
        )
    biased = sum(row.significant() for row in rows)
    logger.info(f"noise study {noise_profile.name} on {env!r}: {biased}/{len(rows)} samples biased beyond 3 SE")
    return rows
