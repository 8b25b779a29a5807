from django.apps import AppConfig


class RewardModelConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.reward_model"
    verbose_name = "reward model"
