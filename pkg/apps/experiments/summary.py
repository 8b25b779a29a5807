"""
Cross-seed summaries of learning curves.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from apps.core.exceptions import ConfigurationError, InsufficientDataError

from .runner import LearningCurve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SummaryTable:
    """
    Per-episode cross-seed mean with a symmetric normal-approximation interval.

    ``interval_defined`` is False for single-seed curves; the bounds are NaN then.
    """

    episode: np.ndarray
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_seeds: int
    confidence: float
    label: dict = field(default_factory=dict)

    @property
    def interval_defined(self):
        return self.n_seeds >= 2

    def __len__(self):
        return self.episode.size

    def rows(self):
        return zip(self.episode.tolist(), self.mean.tolist(), self.ci_low.tolist(), self.ci_high.tolist())


def trailing_mean(values, window):
    """Trailing moving average along the last axis; the first entries average what is available."""
    values = np.asarray(values, dtype=np.float64)
    if window is None or window <= 1:
        return values.copy()
    cumulative = np.cumsum(values, axis=-1)
    shifted = np.zeros_like(cumulative)
    shifted[..., window:] = cumulative[..., :-window]
    counts = np.minimum(np.arange(1, values.shape[-1] + 1), window)
    return (cumulative - shifted) / counts


def z_value(confidence):
    """Two-sided standard-normal quantile for ``confidence``."""
    if not 0.0 <= confidence < 1.0:
        raise ConfigurationError(f"confidence must lie in [0, 1), got {confidence!r}")
    return float(norm.ppf(0.5 + confidence / 2.0))


def summarize(curves, confidence=0.90, smoothing_window=None):
    """
    Summarize a learning curve across seeds.

    Args:
        curves: LearningCurve or array of shape (n_seeds, n_episodes)
        confidence: Interval coverage; 0 gives a zero-width interval
        smoothing_window: Optional trailing moving-average window applied per seed first

    Returns:
        SummaryTable

    Raises:
        InsufficientDataError when there is no seed at all
    """
    label = {}
    if isinstance(curves, LearningCurve):
        label = dict(curves.label)
        curves = curves.rewards
    curves = np.asarray(curves, dtype=np.float64)
    if curves.ndim != 2 or curves.shape[0] == 0:
        raise InsufficientDataError("summarize needs at least one seed")
    z = z_value(confidence)
    smoothed = trailing_mean(curves, smoothing_window)
    n_seeds = smoothed.shape[0]
    mean = smoothed.mean(axis=0)
    if n_seeds < 2:
        logger.warning("single-seed summary: confidence interval undefined")
        low = high = np.full_like(mean, np.nan)
    else:
        half_width = z * smoothed.std(axis=0, ddof=1) / np.sqrt(n_seeds)
        low, high = mean - half_width, mean + half_width
    return SummaryTable(
        episode=np.arange(mean.size),
        mean=mean,
        ci_low=low,
        ci_high=high,
        n_seeds=n_seeds,
        confidence=confidence,
        label=label,
    )
