"""
Normalized prediction-error reports for reward networks and Q critics.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _

from apps.core.exceptions import InsufficientDataError

from .datasets import DEFAULT_GROUND_TRUTH_ROLLOUTS, DEFAULT_HORIZON, ground_truth_q

logger = logging.getLogger(__name__)

ERROR_PERCENTILES = (5, 25, 50, 75, 95)


class DatasetKind(models.TextChoices):
    ON_POLICY = "on_policy", _("On-policy")
    OFF_POLICY = "off_policy", _("Off-policy")


class ModelKind(models.TextChoices):
    REWARD_NET = "reward_net", _("Reward network")
    Q_CRITIC = "q_critic", _("Q critic")


@dataclass(frozen=True)
class PredictionErrorReport:
    """
    Statistics of (prediction - truth) / normalizer over a dataset.

    ``error`` holds a diagnostic instead of statistics when the truth is
    constant over the dataset; the numeric fields are then NaN.
    """

    dataset_kind: str
    model_kind: str
    mean: float
    std: float
    normalizer: float
    sample_count: int
    mean_abs: float = float("nan")
    percentiles: dict = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self):
        return not self.error


def prediction_error_report(predict_fn, dataset, truth_fn, dataset_kind=DatasetKind.OFF_POLICY,
                            model_kind=ModelKind.REWARD_NET, normalizer=None):
    """
    Compare model predictions against ground truth on a dataset.

    Args:
        predict_fn: Callable (state, joint_action) -> prediction
        dataset: Sequence of samples whose first two fields are (state, joint_action)
        truth_fn: Callable (state, joint_action) -> true value
        dataset_kind: DatasetKind of the samples
        model_kind: ModelKind of the predictor
        normalizer: Optional fixed normalizer; max - min of the truth otherwise

    Returns:
        PredictionErrorReport

    Raises:
        InsufficientDataError for an empty dataset
    """
    if len(dataset) == 0:
        raise InsufficientDataError("prediction error needs a non-empty dataset")
    pairs = [tuple(sample)[:2] for sample in dataset]
    predictions = np.array([predict_fn(s, a) for s, a in pairs], dtype=np.float64)
    truths = np.array([truth_fn(s, a) for s, a in pairs], dtype=np.float64)
    if normalizer is None:
        normalizer = float(truths.max() - truths.min())
    if not normalizer > 0.0:
        logger.warning(f"{model_kind} {dataset_kind}: truth is constant over {len(pairs)} samples")
        return PredictionErrorReport(
            dataset_kind=str(dataset_kind),
            model_kind=str(model_kind),
            mean=float("nan"),
            std=float("nan"),
            normalizer=float(normalizer),
            sample_count=len(pairs),
            error="zero normalizer: truth is constant over the dataset",
        )
    errors = (predictions - truths) / normalizer
    return PredictionErrorReport(
        dataset_kind=str(dataset_kind),
        model_kind=str(model_kind),
        mean=float(errors.mean()),
        std=float(errors.std()),
        normalizer=float(normalizer),
        sample_count=len(pairs),
        mean_abs=float(np.abs(errors).mean()),
        percentiles={p: float(v) for p, v in zip(ERROR_PERCENTILES, np.percentile(errors, ERROR_PERCENTILES))},
    )


def reward_net_predictor(reward_net, env):
    return reward_net.as_reward_fn(env.encode_state)


def critic_predictor(critic, env):
    def predict(state, joint_action):
        return critic.value(env.encode_state(state), joint_action)

    return predict


def q_truth_fn(env, joint_policy, rng, gamma=0.95, n_rollouts=DEFAULT_GROUND_TRUTH_ROLLOUTS,
               horizon=DEFAULT_HORIZON):
    """Ground-truth Q under ``joint_policy`` as a (state, joint_action) callable."""

    def truth(state, joint_action):
        return ground_truth_q(env, state, joint_action, joint_policy, n_rollouts, gamma, rng, horizon)

    return truth
