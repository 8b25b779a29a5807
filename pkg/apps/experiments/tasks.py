"""
Celery tasks for experiment runs.
"""

from celery import shared_task

from .config import RunConfig
from .runner import train_seed


@shared_task
def train_seed_task(config_data, seed, snapshots=False):
    """Train one seed of a run; returns the JSON-friendly SeedResult dict."""
    config = RunConfig(**{**config_data, "seeds": tuple(config_data["seeds"])})
    return train_seed(config, seed, snapshots=snapshots).to_dict()
