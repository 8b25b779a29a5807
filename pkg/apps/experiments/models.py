"""
Run bookkeeping models for drlab experiments.

Files on disk are the source of truth; these rows index them for the admin.
"""

from django.db import models
from django.utils.translation import gettext_lazy as _


class ExperimentRun(models.Model):
    """One invocation of a training or analysis command."""

    class Verb(models.TextChoices):
        TRAIN = "train", _("Train")
        GRIDSEARCH = "gridsearch", _("Grid search")
        ANALYZE = "analyze", _("Prediction-error study")
        NOISE = "noise", _("Noise study")

    class Status(models.TextChoices):
        PENDING = "pending", _("Pending")
        RUNNING = "running", _("Running")
        COMPLETED = "completed", _("Completed")
        PARTIAL = "partial", _("Partially failed")
        FAILED = "failed", _("Failed")

    verb = models.CharField(_("verb"), max_length=20, choices=Verb.choices, default=Verb.TRAIN)
    environment = models.CharField(_("environment"), max_length=40)
    algorithm = models.CharField(_("algorithm"), max_length=40, blank=True)
    n_agents = models.PositiveSmallIntegerField(_("agents"))
    status = models.CharField(
        _("status"),
        max_length=20,
        choices=Status.choices,
        default=Status.PENDING,
    )
    output_dir = models.CharField(_("output directory"), max_length=500)
    config = models.JSONField(_("resolved configuration"), default=dict)
    created_at = models.DateTimeField(_("created at"), auto_now_add=True)
    finished_at = models.DateTimeField(_("finished at"), null=True, blank=True)

    class Meta:
        verbose_name = _("experiment run")
        verbose_name_plural = _("experiment runs")
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["environment", "algorithm", "n_agents"], name="experiments_env_alg_n_idx"),
        ]

    def __str__(self):
        return f"{self.verb} {self.algorithm or '-'} on {self.environment} (N={self.n_agents})"

    def get_failed_seeds(self):
        return list(
            self.seed_outcomes.exclude(status=SeedOutcome.Status.COMPLETED).values_list("seed", flat=True)
        )


class SeedOutcome(models.Model):
    """Result of one seed of a run."""

    class Status(models.TextChoices):
        COMPLETED = "completed", _("Completed")
        DIVERGED = "diverged", _("Diverged")

    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name="seed_outcomes",
        verbose_name=_("run"),
    )
    seed = models.BigIntegerField(_("seed"))
    status = models.CharField(
        _("status"),
        max_length=20,
        choices=Status.choices,
        default=Status.COMPLETED,
    )
    episodes_completed = models.PositiveIntegerField(_("episodes completed"), default=0)
    final_decile_reward = models.FloatField(_("final-decile mean reward"), null=True, blank=True)
    diagnostic = models.TextField(_("diagnostic"), blank=True)

    class Meta:
        verbose_name = _("seed outcome")
        verbose_name_plural = _("seed outcomes")
        ordering = ["run", "seed"]
        unique_together = [["run", "seed"]]

    def __str__(self):
        return f"seed {self.seed}: {self.status}"
