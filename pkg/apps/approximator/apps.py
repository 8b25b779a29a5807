from django.apps import AppConfig


class ApproximatorConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.approximator"
    verbose_name = "function approximator"
