"""
Shared command-line surface for experiment management commands.
"""

from django.core.management.base import CommandError

from apps.core.exceptions import DrLabError

from .config import RunConfig

# option dest -> RunConfig key
CONFIG_OPTIONS = {
    "env": "env",
    "algorithm": "algorithm",
    "n_agents": "n_agents",
    "episodes": "n_episodes",
    "horizon": "horizon",
    "gamma": "gamma",
    "policy_lr": "policy_lr",
    "critic_lr": "critic_lr",
    "seeds": "seeds",
    "master_seed": "master_seed",
    "output_dir": "output_dir",
    "policy_hidden": "policy_hidden",
    "critic_hidden": "critic_hidden",
    "target_refresh": "target_refresh",
    "smoothing_window": "smoothing_window",
    "confidence": "confidence",
}


class RunConfigCommandMixin:
    """Adds RunConfig flags to a command and builds the config from them."""

    def add_run_config_arguments(self, parser):
        parser.add_argument("--config", type=str, default=None, help="key=value run configuration file")
        parser.add_argument("--env", type=str, default=None, help="multi_rover or predator_prey")
        parser.add_argument("--algorithm", type=str, default=None, help="Training algorithm")
        parser.add_argument("--n-agents", type=int, default=None, help="Number of agents")
        parser.add_argument("--episodes", type=int, default=None, help="Training episodes per seed")
        parser.add_argument("--horizon", type=int, default=None, help="Steps per episode")
        parser.add_argument("--gamma", type=float, default=None, help="Discount factor")
        parser.add_argument("--policy-lr", type=float, default=None, help="Policy learning rate")
        parser.add_argument("--critic-lr", type=float, default=None, help="Critic / reward network learning rate")
        parser.add_argument("--seeds", type=str, default=None, help="Comma separated seed list")
        parser.add_argument("--master-seed", type=int, default=None, help="Master seed")
        parser.add_argument("--output-dir", type=str, default=None, help="Output directory")
        parser.add_argument("--policy-hidden", type=int, default=None, help="Policy hidden units")
        parser.add_argument("--critic-hidden", type=int, default=None, help="Critic / reward network hidden units")
        parser.add_argument("--target-refresh", type=int, default=None, help="Critic target refresh period")
        parser.add_argument("--smoothing-window", type=int, default=None, help="Summary moving-average window")
        parser.add_argument("--confidence", type=float, default=None, help="Summary interval confidence")

    def build_config(self, options):
        """Config file values overridden by CLI flags, resolved and validated."""
        overrides = {
            key: options[dest] for dest, key in CONFIG_OPTIONS.items() if options.get(dest) is not None
        }
        try:
            if options.get("config"):
                config = RunConfig.from_file(options["config"], overrides)
            else:
                config = RunConfig.from_values(overrides)
            return config.resolved()
        except DrLabError as e:
            raise CommandError(str(e)) from e
