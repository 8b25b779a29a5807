"""
Best-effort run bookkeeping in the database.

Every function swallows database errors with a warning: an unmigrated or
missing bookkeeping database never stops an experiment.
"""
import logging

from django.db import DatabaseError
from django.utils import timezone

from .models import ExperimentRun, SeedOutcome

logger = logging.getLogger(__name__)


def start_run(verb, config):
    """Create a RUNNING ExperimentRun for ``config``; None when the database is unavailable."""
    try:
        return ExperimentRun.objects.create(
            verb=verb,
            environment=config.env,
            algorithm=config.algorithm,
            n_agents=config.n_agents,
            status=ExperimentRun.Status.RUNNING,
            output_dir=str(config.output_dir),
            config=config.to_dict(),
        )
    except DatabaseError as e:
        logger.warning(f"Run bookkeeping unavailable, continuing without it: {str(e)}")
        return None


def finish_run(run_record, outcome=None, status=None):
    """Store seed outcomes and the final status of a run."""
    if run_record is None:
        return
    try:
        if outcome is not None:
            tail = max(1, outcome.config.n_episodes // 10)
            for seed, rewards in zip(outcome.curve.seeds, outcome.curve.rewards):
                SeedOutcome.objects.create(
                    run=run_record,
                    seed=seed,
                    status=SeedOutcome.Status.COMPLETED,
                    episodes_completed=rewards.size,
                    final_decile_reward=float(rewards[-tail:].mean()),
                )
            for failure in outcome.failures:
                SeedOutcome.objects.create(
                    run=run_record,
                    seed=failure.seed,
                    status=SeedOutcome.Status.DIVERGED,
                    episodes_completed=len(failure.rewards),
                    diagnostic=failure.diagnostic,
                )
            if status is None:
                if not outcome.failures:
                    status = ExperimentRun.Status.COMPLETED
                elif outcome.curve.n_seeds:
                    status = ExperimentRun.Status.PARTIAL
                else:
                    status = ExperimentRun.Status.FAILED
        run_record.status = status or ExperimentRun.Status.COMPLETED
        run_record.finished_at = timezone.now()
        run_record.save(update_fields=["status", "finished_at"])
    except DatabaseError as e:
        logger.warning(f"Could not record outcome of run {run_record.pk}: {str(e)}")
