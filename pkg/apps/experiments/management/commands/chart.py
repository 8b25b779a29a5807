"""
Management command to render SVG charts from run directories.
"""
from pathlib import Path

from decouple import RepositoryEnv
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import DrLabError
from apps.experiments.charts import emit_charts
from apps.experiments.exporters import CURVE_FILE, MANIFEST_FILE, SUMMARY_FILE, read_curve, read_summary
from apps.experiments.summary import summarize


def run_label(run_dir):
    """(env, algorithm, n_agents) of a run directory, from its manifest."""
    manifest = run_dir / MANIFEST_FILE
    if not manifest.is_file():
        raise CommandError(f"{run_dir} has no {MANIFEST_FILE}; train with --manifest")
    data = RepositoryEnv(str(manifest)).data
    return {"env": data["env"], "algorithm": data["algorithm"], "n_agents": int(data["n_agents"])}, data


def load_table(run_dir, smoothing_window=None):
    label, data = run_label(run_dir)
    confidence = float(data.get("confidence", 0.9))
    window = smoothing_window or int(data.get("smoothing_window", 1))
    if (run_dir / CURVE_FILE).is_file():
        return summarize(read_curve(run_dir / CURVE_FILE, label), confidence, window)
    if (run_dir / SUMMARY_FILE).is_file():
        return read_summary(run_dir / SUMMARY_FILE, label, confidence)
    raise CommandError(f"{run_dir} has neither {CURVE_FILE} nor {SUMMARY_FILE}")


class Command(BaseCommand):
    help = "Render one SVG per (environment, N) from trained run directories"

    def add_arguments(self, parser):
        parser.add_argument("run_dirs", nargs="+", type=str, help="Run output directories")
        parser.add_argument("--output-dir", type=str, default="charts", help="Directory for the SVG files")
        parser.add_argument("--smoothing-window", type=int, default=None, help="Override the run smoothing window")

    def handle(self, *args, **options):
        tables = [load_table(Path(d), options["smoothing_window"]) for d in options["run_dirs"]]
        try:
            paths = emit_charts(tables, options["output_dir"])
        except DrLabError as e:
            raise CommandError(str(e)) from e
        for path in paths:
            self.stdout.write(self.style.SUCCESS(f"Chart written to {path}"))
