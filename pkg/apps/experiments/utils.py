"""
Utility functions for experiments app.
"""

import logging

from celery import group

logger = logging.getLogger(__name__)


def is_broker_error(exc):
    """True when ``exc`` means the Celery broker / result backend is unreachable."""
    error_str = str(exc).lower()
    return (
        "operationalerror" in error_str
        or "connection" in error_str
        or "refused" in error_str
        or "no connection" in error_str
        or isinstance(exc, (ConnectionError, OSError))
    )


def safe_group_execute(task_func, arg_tuples):
    """
    Run ``task_func`` once per argument tuple as a Celery group, with fallback
    to synchronous in-process execution.

    Results come back in the order of ``arg_tuples`` either way.

    Args:
        task_func: Celery task
        arg_tuples: Sequence of positional-argument tuples

    Returns:
        List of task return values
    """
    arg_tuples = list(arg_tuples)
    try:
        result = group(task_func.s(*args) for args in arg_tuples).apply_async()
        values = [child.get() for child in result.results]
        logger.debug(f"{len(arg_tuples)} {task_func.__name__} tasks completed via Celery")
        return list(values)
    except Exception as e:
        if not is_broker_error(e):
            logger.error(f"Unexpected error executing {task_func.__name__}: {str(e)}", exc_info=True)
            raise
        logger.warning(
            f"Celery broker unavailable. Executing {len(arg_tuples)} {task_func.__name__} "
            f"tasks synchronously. Error: {str(e)}"
        )
        return [task_func(*args) for args in arg_tuples]
