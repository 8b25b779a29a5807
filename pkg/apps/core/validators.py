"""
Validation helpers for experiment and model parameters.
"""
import math

from .exceptions import ConfigurationError


def validate_positive(value, name="value"):
    """
    Validate that a number is finite and strictly positive.

    Args:
        value: Number to check
        name: Name used in error messages

    Raises:
        ConfigurationError if the value is not a positive finite number
    """
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")


def validate_learning_rate(value, name="learning rate"):
    """Validate a learning rate (strictly positive, finite)."""
    validate_positive(value, name)


def validate_discount(gamma):
    """Validate a discount factor in (0, 1]."""
    if not isinstance(gamma, (int, float)) or not (0.0 < gamma <= 1.0):
        raise ConfigurationError(f"discount must lie in (0, 1], got {gamma!r}")


def validate_probability(value, name="probability", open_interval=True):
    """
    Validate a probability.

    Args:
        value: Number to check
        name: Name used in error messages
        open_interval: Require value in (0, 1) instead of [0, 1]
    """
    if open_interval:
        ok = 0.0 < value < 1.0
    else:
        ok = 0.0 <= value <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ConfigurationError(f"{name} must lie in {bounds}, got {value!r}")


def validate_n_agents(n_agents, minimum=2):
    """Validate the number of agents in a team."""
    if not isinstance(n_agents, int) or n_agents < minimum:
        raise ConfigurationError(f"n_agents must be an integer >= {minimum}, got {n_agents!r}")


def validate_seeds(seeds):
    """Validate a seed list: non-empty and without duplicates."""
    seeds = list(seeds)
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError(f"seeds must be distinct, got {seeds}")
