"""
Admin configuration for experiments app.
"""

from django.contrib import admin

from .models import ExperimentRun, SeedOutcome


class SeedOutcomeInline(admin.TabularInline):
    model = SeedOutcome
    extra = 0
    readonly_fields = ["seed", "status", "episodes_completed", "final_decile_reward", "diagnostic"]


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin interface for ExperimentRun model."""

    list_display = [
        "verb",
        "environment",
        "algorithm",
        "n_agents",
        "status",
        "created_at",
        "finished_at",
    ]
    list_filter = ["verb", "environment", "algorithm", "n_agents", "status"]
    search_fields = ["output_dir", "environment", "algorithm"]
    readonly_fields = ["created_at", "finished_at", "config"]
    date_hierarchy = "created_at"
    inlines = [SeedOutcomeInline]


@admin.register(SeedOutcome)
class SeedOutcomeAdmin(admin.ModelAdmin):
    list_display = ["run", "seed", "status", "episodes_completed", "final_decile_reward"]
    list_filter = ["status"]
    search_fields = ["diagnostic"]
