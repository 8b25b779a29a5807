import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "verb",
                    models.CharField(
                        choices=[
                            ("train", "Train"),
                            ("gridsearch", "Grid search"),
                            ("analyze", "Prediction-error study"),
                            ("noise", "Noise study"),
                        ],
                        default="train",
                        max_length=20,
                        verbose_name="verb",
                    ),
                ),
                ("environment", models.CharField(max_length=40, verbose_name="environment")),
                ("algorithm", models.CharField(blank=True, max_length=40, verbose_name="algorithm")),
                ("n_agents", models.PositiveSmallIntegerField(verbose_name="agents")),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("running", "Running"),
                            ("completed", "Completed"),
                            ("partial", "Partially failed"),
                            ("failed", "Failed"),
                        ],
                        default="pending",
                        max_length=20,
                        verbose_name="status",
                    ),
                ),
                ("output_dir", models.CharField(max_length=500, verbose_name="output directory")),
                ("config", models.JSONField(default=dict, verbose_name="resolved configuration")),
                ("created_at", models.DateTimeField(auto_now_add=True, verbose_name="created at")),
                ("finished_at", models.DateTimeField(blank=True, null=True, verbose_name="finished at")),
            ],
            options={
                "verbose_name": "experiment run",
                "verbose_name_plural": "experiment runs",
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(
                        fields=["environment", "algorithm", "n_agents"],
                        name="experiments_env_alg_n_idx",
                    )
                ],
            },
        ),
        migrations.CreateModel(
            name="SeedOutcome",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("seed", models.BigIntegerField(verbose_name="seed")),
                (
                    "status",
                    models.CharField(
                        choices=[("completed", "Completed"), ("diverged", "Diverged")],
                        default="completed",
                        max_length=20,
                        verbose_name="status",
                    ),
                ),
                (
                    "episodes_completed",
                    models.PositiveIntegerField(default=0, verbose_name="episodes completed"),
                ),
                (
                    "final_decile_reward",
                    models.FloatField(blank=True, null=True, verbose_name="final-decile mean reward"),
                ),
                ("diagnostic", models.TextField(blank=True, verbose_name="diagnostic")),
                (
                    "run",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="seed_outcomes",
                        to="experiments.experimentrun",
                        verbose_name="run",
                    ),
                ),
            ],
            options={
                "verbose_name": "seed outcome",
                "verbose_name_plural": "seed outcomes",
                "ordering": ["run", "seed"],
                "unique_together": {("run", "seed")},
            },
        ),
    ]
