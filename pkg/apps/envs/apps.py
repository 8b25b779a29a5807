from django.apps import AppConfig


class EnvsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.envs"
    verbose_name = "gridworld environments"
