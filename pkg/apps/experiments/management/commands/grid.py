"""
Management command reproducing the full experiment grid.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import DrLabError
from apps.envs.registry import EnvKind
from apps.experiments.charts import emit_charts
from apps.experiments.config import GRID_AGENT_COUNTS, RunConfig
from apps.experiments.pipeline import train_and_export
from apps.experiments.summary import summarize
from apps.learners.registry import Algorithm


def _split(value, choices):
    return tuple(v.strip() for v in value.split(",")) if value else tuple(choices)


class Command(BaseCommand):
    help = "Train every algorithm on both environments for N in {3, 5, 8} and chart the results"

    def add_arguments(self, parser):
        parser.add_argument("--output-dir", type=str, default=None, help="Root directory of the grid")
        parser.add_argument("--envs", type=str, default=None, help="Comma separated environments")
        parser.add_argument("--algorithms", type=str, default=None, help="Comma separated algorithms")
        parser.add_argument("--agents", type=str, default=None, help="Comma separated team sizes")
        parser.add_argument("--episodes", type=int, default=None, help="Override the episode budget")
        parser.add_argument("--seeds", type=str, default=None, help="Comma separated seed list")

    def handle(self, *args, **options):
        root = Path(options["output_dir"] or settings.DRLAB_OUTPUT_ROOT)
        agent_counts = (
            tuple(int(n) for n in options["agents"].split(",")) if options["agents"] else GRID_AGENT_COUNTS
        )
        tables = []
        failed_cells = []
        for env in _split(options["envs"], EnvKind.values):
            for n_agents in agent_counts:
                for algorithm in _split(options["algorithms"], Algorithm.values):
                    overrides = {"seeds": options["seeds"], "n_episodes": options["episodes"]}
                    config = RunConfig(
                        env=env,
                        algorithm=algorithm,
                        n_agents=n_agents,
                        output_dir=str(root / f"{env}-N{n_agents}" / algorithm),
                    ).with_overrides(**overrides)
                    self.stdout.write(f"Training {algorithm} on {env} (N={n_agents})...")
                    try:
                        outcome = train_and_export(config, manifest=True)
                    except DrLabError as e:
                        raise CommandError(str(e)) from e
                    if outcome.failures:
                        failed_cells.append(f"{env}/N{n_agents}/{algorithm}")
                        self.stdout.write(self.style.WARNING(f"  seeds {outcome.failed_seeds} diverged"))
                    if outcome.curve.n_seeds:
                        resolved = outcome.config
                        tables.append(summarize(outcome.curve, resolved.confidence, resolved.smoothing_window))
        if tables:
            for path in emit_charts(tables, root / "charts"):
                self.stdout.write(self.style.SUCCESS(f"Chart written to {path}"))
        if failed_cells:
            raise CommandError(f"diverged seeds in {', '.join(failed_cells)}")
        self.stdout.write(self.style.SUCCESS(f"Grid complete under {root}"))
