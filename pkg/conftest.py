"""
Shared pytest fixtures for drlab.
"""
import logging
import os

import pytest

from apps.core.utils import make_rng


def pytest_collection_modifyitems(config, items):
    if os.environ.get("DRLAB_ACCEPTANCE") == "1":
        return
    skip = pytest.mark.skip(reason="set DRLAB_ACCEPTANCE=1 to run acceptance runs")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture(autouse=True)
def isolated_output(settings, tmp_path):
    settings.DRLAB_OUTPUT_ROOT = tmp_path
    settings.CELERY_TASK_ALWAYS_EAGER = True


@pytest.fixture
def app_logs(caplog, monkeypatch):
    """caplog for the ``apps`` loggers, which do not propagate to root in settings."""
    monkeypatch.setattr(logging.getLogger("apps"), "propagate", True)
    caplog.set_level(logging.DEBUG, logger="apps")
    return caplog
