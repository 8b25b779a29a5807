"""
Management command to search learning rates at N = 3.
"""
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import DrLabError
from apps.experiments.exporters import write_gridsearch
from apps.experiments.gridsearch import GRIDSEARCH_SEEDS, STANDARD_RATES, gridsearch, rate_grid
from apps.experiments.mixins import RunConfigCommandMixin
from apps.experiments.models import ExperimentRun
from apps.experiments.records import finish_run, start_run


def _rates(value):
    if value is None:
        return STANDARD_RATES
    return tuple(float(v) for v in value.split(","))


class Command(RunConfigCommandMixin, BaseCommand):
    help = "Rank (policy_lr, critic_lr) pairs by final-decile reward with N=3 agents"

    def add_arguments(self, parser):
        self.add_run_config_arguments(parser)
        parser.add_argument("--policy-rates", type=str, default=None, help="Comma separated policy rates")
        parser.add_argument("--critic-rates", type=str, default=None, help="Comma separated critic rates")
        parser.add_argument("--grid-seeds", type=int, default=GRIDSEARCH_SEEDS, help="Seeds per cell")

    def handle(self, *args, **options):
        config = self.build_config(options)
        try:
            rates = rate_grid(config.algorithm, _rates(options["policy_rates"]), _rates(options["critic_rates"]))
        except ValueError as e:
            raise CommandError(f"invalid rate list: {e}") from e
        self.stdout.write(f"Searching {len(rates)} rate pairs for {config.algorithm} on {config.env}...")
        run_record = start_run(ExperimentRun.Verb.GRIDSEARCH, config)
        try:
            result = gridsearch(config, rates, n_seeds=options["grid_seeds"])
        except DrLabError as e:
            finish_run(run_record, status=ExperimentRun.Status.FAILED)
            raise CommandError(str(e)) from e
        path = write_gridsearch(result, config.output_dir)
        finish_run(run_record)
        policy_lr, critic_lr = result.best
        self.stdout.write(
            self.style.SUCCESS(f"Best: policy_lr={policy_lr:g} critic_lr={critic_lr}; ranking in {path}")
        )
