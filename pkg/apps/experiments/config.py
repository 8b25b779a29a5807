"""
Run configuration: defaults, key=value config files and manifests.
"""
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from decouple import Csv, RepositoryEnv
from django.conf import settings

from apps.core.exceptions import ConfigurationError
from apps.core.validators import (
    validate_discount,
    validate_learning_rate,
    validate_n_agents,
    validate_positive,
    validate_probability,
    validate_seeds,
)
from apps.envs.registry import EnvKind
from apps.learners.registry import ALGORITHMS, Algorithm

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 50
DEFAULT_GAMMA = 0.95
DEFAULT_SEEDS = tuple(range(10))
DEFAULT_SMOOTHING_WINDOW = 100
DEFAULT_CONFIDENCE = 0.90

# (policy rate, critic / reward-network rate) per algorithm and environment
DEFAULT_LEARNING_RATES = {
    (Algorithm.DR_REINFORCE, EnvKind.MULTI_ROVER): (5e-4, None),
    (Algorithm.DR_REINFORCE, EnvKind.PREDATOR_PREY): (5e-4, None),
    (Algorithm.DR_REINFORCE_R, EnvKind.MULTI_ROVER): (5e-4, 25e-3),
    (Algorithm.DR_REINFORCE_R, EnvKind.PREDATOR_PREY): (5e-4, 1e-4),
    (Algorithm.REINFORCE, EnvKind.MULTI_ROVER): (5e-4, None),
    (Algorithm.REINFORCE, EnvKind.PREDATOR_PREY): (5e-4, None),
    (Algorithm.Q_A2C, EnvKind.MULTI_ROVER): (5e-4, 25e-4),
    (Algorithm.Q_A2C, EnvKind.PREDATOR_PREY): (1e-4, 5e-3),
    (Algorithm.COMA, EnvKind.MULTI_ROVER): (5e-5, 5e-4),
    (Algorithm.COMA, EnvKind.PREDATOR_PREY): (1e-4, 5e-3),
    (Algorithm.COLBY, EnvKind.MULTI_ROVER): (5e-4, 5e-4),
    (Algorithm.COLBY, EnvKind.PREDATOR_PREY): (5e-4, 5e-5),
}

# Critic-based methods whose critic must learn at least as fast as the policies
CRITIC_ALGORITHMS = (Algorithm.COMA, Algorithm.Q_A2C)

GRID_AGENT_COUNTS = (3, 5, 8)

# Outcome lines a manifest appends after the config keys
MANIFEST_STATUS_KEYS = ("status", "failed_seeds")
DIVERGED_KEY_PREFIX = "diverged."


def is_manifest_status_key(key):
    return key in MANIFEST_STATUS_KEYS or key.startswith(DIVERGED_KEY_PREFIX)


def default_episodes(n_agents):
    """Episode budget: 20,000 for three agents, 40,000 for larger teams."""
    return 20_000 if n_agents <= 3 else 40_000


def default_learning_rates(algorithm, env):
    return DEFAULT_LEARNING_RATES[(Algorithm(algorithm), EnvKind(env))]


def rate_order_violated(algorithm, policy_lr, critic_lr):
    return Algorithm(algorithm) in CRITIC_ALGORITHMS and critic_lr is not None and critic_lr < policy_lr


def _parse_seeds(value):
    if isinstance(value, str):
        try:
            return tuple(Csv(cast=int)(value))
        except ValueError:
            raise ConfigurationError(f"seeds must be comma separated integers, got {value!r}") from None
    return tuple(int(seed) for seed in value)


def _parse_optional_float(value):
    if value in (None, "", "none", "None"):
        return None
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    """
    Complete description of one experiment.

    ``None`` learning rates and episode counts are filled from the defaults
    for the (algorithm, environment) pair by ``resolved()``.
    """

    env: str = EnvKind.MULTI_ROVER
    algorithm: str = Algorithm.DR_REINFORCE
    n_agents: int = 3
    n_episodes: int = None
    horizon: int = DEFAULT_HORIZON
    gamma: float = DEFAULT_GAMMA
    policy_lr: float = None
    critic_lr: float = None
    seeds: tuple = DEFAULT_SEEDS
    master_seed: int = 0
    output_dir: str = ""
    policy_hidden: int = 64
    critic_hidden: int = 256
    target_refresh: int = 100
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
    confidence: float = DEFAULT_CONFIDENCE

    _CASTS = {
        "n_agents": int,
        "n_episodes": int,
        "horizon": int,
        "gamma": float,
        "policy_lr": _parse_optional_float,
        "critic_lr": _parse_optional_float,
        "seeds": _parse_seeds,
        "master_seed": int,
        "policy_hidden": int,
        "critic_hidden": int,
        "target_refresh": int,
        "smoothing_window": int,
        "confidence": float,
    }

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_values(cls, values):
        """
        Build a config from raw (usually string) values keyed by config key.

        Raises:
            ConfigurationError for unknown keys or unparseable values
        """
        unknown = sorted(set(values) - set(cls.keys()))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        parsed = {}
        for key, raw in values.items():
            cast = cls._CASTS.get(key, str)
            try:
                parsed[key] = cast(raw) if raw is not None else None
            except (TypeError, ValueError):
                raise ConfigurationError(f"invalid value for {key}: {raw!r}") from None
        return cls(**parsed)

    @classmethod
    def from_file(cls, path, overrides=None):
        """
        Read a key=value config file; ``overrides`` (e.g. CLI flags) win over
        file values. ``None`` overrides are ignored.

        A manifest is a valid config file: its outcome lines are skipped.
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        repository = RepositoryEnv(str(path))
        values = {k: v for k, v in repository.data.items() if not is_manifest_status_key(k)}
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_values(values)

    def with_overrides(self, **overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def resolved(self):
        """Config with defaults filled in and every field validated."""
        try:
            env = EnvKind(self.env)
            algorithm = Algorithm(self.algorithm)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        default_policy_lr, default_critic_lr = default_learning_rates(algorithm, env)
        default_output = Path(settings.DRLAB_OUTPUT_ROOT) / f"{env.value}-N{self.n_agents}" / algorithm.value
        config = replace(
            self,
            env=env.value,
            algorithm=algorithm.value,
            seeds=_parse_seeds(self.seeds),
            n_episodes=self.n_episodes if self.n_episodes is not None else default_episodes(self.n_agents),
            policy_lr=self.policy_lr if self.policy_lr is not None else default_policy_lr,
            critic_lr=self.critic_lr if self.critic_lr is not None else default_critic_lr,
            output_dir=self.output_dir or str(default_output),
        )
        config.validate()
        if rate_order_violated(algorithm, config.policy_lr, config.critic_lr):
            logger.warning(
                f"{algorithm.value}: critic learning rate {config.critic_lr:g} is below "
                f"the policy learning rate {config.policy_lr:g}"
            )
        return config

    def validate(self):
        validate_n_agents(self.n_agents)
        validate_positive(self.n_episodes, "n_episodes")
        validate_positive(self.horizon, "horizon")
        validate_discount(self.gamma)
        validate_learning_rate(self.policy_lr, "policy_lr")
        if ALGORITHMS[Algorithm(self.algorithm)].uses_critic_lr:
            validate_learning_rate(self.critic_lr, "critic_lr")
        validate_seeds(self.seeds)
        validate_positive(self.policy_hidden, "policy_hidden")
        validate_positive(self.critic_hidden, "critic_hidden")
        validate_positive(self.target_refresh, "target_refresh")
        validate_positive(self.smoothing_window, "smoothing_window")
        validate_probability(self.confidence, "confidence", open_interval=False)
        if self.confidence >= 1.0:
            raise ConfigurationError("confidence must be below 1")

    def learner_kwargs(self):
        return {
            "gamma": self.gamma,
            "policy_lr": self.policy_lr,
            "critic_lr": self.critic_lr,
            "policy_hidden": self.policy_hidden,
            "critic_hidden": self.critic_hidden,
            "target_refresh": self.target_refresh,
        }

    def to_dict(self):
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        return data

    def to_lines(self):
        """key=value lines in field order; seeds comma separated."""
        lines = []
        for key, value in self.to_dict().items():
            if key == "seeds":
                value = ",".join(str(seed) for seed in value)
            elif isinstance(value, float):
                value = repr(value)
            elif value is None:
                value = "none"
            lines.append(f"{key}={value}")
        return lines


def check_default_rate_ordering():
    """
    Assert that every default critic rate is at least the policy rate.

    Raises:
        ConfigurationError naming the offending pairs
    """
    offending = [
        f"{algorithm.value}/{env.value}"
        for (algorithm, env), (policy_lr, critic_lr) in DEFAULT_LEARNING_RATES.items()
        if rate_order_violated(algorithm, policy_lr, critic_lr)
    ]
    if offending:
        raise ConfigurationError(f"default critic rates below policy rates: {', '.join(offending)}")


check_default_rate_ordering()
