"""
Management command for the noisy-baseline study.
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.analysis.noise import (
    DEFAULT_NOISE_SAMPLES,
    DEFAULT_STATE_SAMPLES,
    NoiseKind,
    NoiseProfile,
    default_noise_profile,
    noise_study,
)
from apps.core.exceptions import DrLabError
from apps.core.utils import derive_rng
from apps.envs.registry import make_env
from apps.experiments.exporters import write_noise
from apps.experiments.mixins import RunConfigCommandMixin
from apps.experiments.models import ExperimentRun
from apps.experiments.records import finish_run, start_run


class Command(RunConfigCommandMixin, BaseCommand):
    help = "Measure the bias and variance of difference rewards under noisy counterfactual rewards"

    def add_arguments(self, parser):
        self.add_run_config_arguments(parser)
        parser.add_argument(
            "--kinds",
            type=str,
            default=",".join(NoiseKind.values),
            help="Comma separated noise kinds",
        )
        parser.add_argument("--scale", type=float, default=None, help="Scale used for every kind")
        parser.add_argument("--noise-samples", type=int, default=DEFAULT_NOISE_SAMPLES)
        parser.add_argument("--state-samples", type=int, default=DEFAULT_STATE_SAMPLES)

    def handle(self, *args, **options):
        config = self.build_config(options)
        run_record = start_run(ExperimentRun.Verb.NOISE, config)
        try:
            env = make_env(config.env, config.n_agents)
            rows = []
            for index, kind in enumerate(options["kinds"].split(",")):
                seed = config.seeds[0]
                if options["scale"] is None:
                    profile = default_noise_profile(kind.strip(), env, rng_seed=seed + index)
                else:
                    profile = NoiseProfile(kind.strip(), options["scale"], rng_seed=seed + index)
                study = noise_study(
                    env,
                    config.n_agents,
                    profile,
                    n_noise_samples=options["noise_samples"],
                    n_state_samples=options["state_samples"],
                    rng=derive_rng(config.master_seed, seed),
                )
                biased = sum(row.significant() for row in study)
                self.stdout.write(f"{profile.name}: {biased}/{len(study)} samples biased beyond 3 standard errors")
                rows.extend((profile, row) for row in study)
        except (DrLabError, ValueError) as e:
            finish_run(run_record, status=ExperimentRun.Status.FAILED)
            raise CommandError(str(e)) from e
        path = write_noise(rows, Path(config.output_dir))
        finish_run(run_record)
        self.stdout.write(self.style.SUCCESS(f"Noise study written to {path}"))
