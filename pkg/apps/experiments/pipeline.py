"""
Train-and-export pipeline shared by the ``train`` and ``grid`` commands.
"""
import logging
from pathlib import Path

from .exporters import write_curve, write_manifest, write_summary
from .records import finish_run, start_run
from .runner import run
from .summary import summarize

logger = logging.getLogger(__name__)


def train_and_export(config, snapshots=False, manifest=False):
    """
    Run every seed of ``config`` and write curve.csv, summary.csv and, when
    asked for or when a seed diverged, manifest.txt.

    Returns:
        RunOutcome
    """
    config = config.resolved()
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    run_record = start_run("train", config)
    outcome = run(config, snapshots=snapshots)
    write_curve(outcome.curve, output_dir)
    if outcome.curve.n_seeds:
        table = summarize(outcome.curve, config.confidence, config.smoothing_window)
        write_summary(table, output_dir)
    if manifest or outcome.failures:
        write_manifest(config, output_dir, outcome.failures)
    finish_run(run_record, outcome)
    return outcome
