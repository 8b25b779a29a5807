"""
Environment selection by name.
"""
from django.db import models
from django.utils.translation import gettext_lazy as _

from apps.core.exceptions import ConfigurationError

from .multi_rover import MultiRover
from .predator_prey import PredatorPrey


class EnvKind(models.TextChoices):
    MULTI_ROVER = "multi_rover", _("Multi-rover")
    PREDATOR_PREY = "predator_prey", _("Predator-prey")


ENVIRONMENTS = {
    EnvKind.MULTI_ROVER: MultiRover,
    EnvKind.PREDATOR_PREY: PredatorPrey,
}


def make_env(env_kind, n_agents):
    """Build the environment named ``env_kind`` for ``n_agents`` agents."""
    try:
        env_class = ENVIRONMENTS[EnvKind(env_kind)]
    except ValueError:
        raise ConfigurationError(
            f"unknown environment {env_kind!r}; choose one of {', '.join(EnvKind.values)}"
        ) from None
    return env_class(n_agents)


def reset(env_kind, n_agents, rng_seed):
    """Random initial GridState for ``env_kind``; deterministic per seed."""
    return make_env(env_kind, n_agents).reset(rng_seed)
