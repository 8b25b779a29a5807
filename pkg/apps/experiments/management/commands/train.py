"""
Management command to train one algorithm over a list of seeds.
"""
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import DrLabError
from apps.experiments.mixins import RunConfigCommandMixin
from apps.experiments.pipeline import train_and_export


class Command(RunConfigCommandMixin, BaseCommand):
    help = "Train an algorithm on an environment for every seed and write curve.csv / summary.csv"

    def add_arguments(self, parser):
        self.add_run_config_arguments(parser)
        parser.add_argument(
            "--manifest",
            action="store_true",
            help="Write the resolved configuration to manifest.txt",
        )
        parser.add_argument(
            "--snapshots",
            action="store_true",
            help="Write final network parameters of every seed",
        )

    def handle(self, *args, **options):
        """Main command handler."""
        config = self.build_config(options)
        self.stdout.write(
            f"Training {config.algorithm} on {config.env} (N={config.n_agents}) "
            f"for {config.n_episodes} episodes x {len(config.seeds)} seeds..."
        )
        try:
            outcome = train_and_export(config, snapshots=options["snapshots"], manifest=options["manifest"])
        except DrLabError as e:
            raise CommandError(str(e)) from e
        if outcome.failures:
            raise CommandError(
                f"seeds {', '.join(map(str, outcome.failed_seeds))} diverged; see {config.output_dir}/manifest.txt"
            )
        self.stdout.write(
            self.style.SUCCESS(
                f"Done: final-decile mean reward {outcome.curve.final_decile_mean():.4f}, "
                f"outputs in {config.output_dir}"
            )
        )
