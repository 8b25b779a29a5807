"""
Management command for the reward-network vs Q-critic prediction-error study.
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.analysis.datasets import DEFAULT_DATASET_SIZE, DEFAULT_GROUND_TRUTH_ROLLOUTS
from apps.core.exceptions import DrLabError
from apps.experiments.exporters import write_errors
from apps.experiments.mixins import RunConfigCommandMixin
from apps.experiments.models import ExperimentRun
from apps.experiments.records import finish_run, start_run
from apps.experiments.studies import lower_error_model, prediction_error_study


class Command(RunConfigCommandMixin, BaseCommand):
    help = "Train Dr.ReinforceR and COMA, then write normalized prediction errors to errors.csv"

    def add_arguments(self, parser):
        self.add_run_config_arguments(parser)
        parser.add_argument("--samples", type=int, default=DEFAULT_DATASET_SIZE, help="Samples per dataset")
        parser.add_argument(
            "--rollouts",
            type=int,
            default=DEFAULT_GROUND_TRUTH_ROLLOUTS,
            help="Rollouts per ground-truth Q estimate",
        )

    def handle(self, *args, **options):
        config = self.build_config(options)
        run_record = start_run(ExperimentRun.Verb.ANALYZE, config)
        try:
            rows = prediction_error_study(config, n_samples=options["samples"], n_rollouts=options["rollouts"])
        except DrLabError as e:
            finish_run(run_record, status=ExperimentRun.Status.FAILED)
            raise CommandError(str(e)) from e
        path = write_errors(rows, Path(config.output_dir))
        finish_run(run_record)
        for _, _, report in rows:
            style = self.style.SUCCESS if report.ok else self.style.WARNING
            self.stdout.write(
                style(f"{report.model_kind:>10} {report.dataset_kind:>10}: mean {report.mean:+.4f} std {report.std:.4f}")
            )
        best = lower_error_model(rows)
        if best is None:
            self.stdout.write(self.style.WARNING("No off-policy comparison: a ground truth was constant"))
        else:
            self.stdout.write(self.style.SUCCESS(f"Lower off-policy mean absolute error: {best}"))
        self.stdout.write(self.style.SUCCESS(f"Prediction errors written to {path}"))
