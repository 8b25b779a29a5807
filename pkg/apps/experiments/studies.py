"""
Prediction-error study: compares a trained reward network and a trained Q
critic against ground truth on on-policy and off-policy datasets.
"""
import logging
from dataclasses import replace

from apps.analysis.datasets import (
    DEFAULT_DATASET_SIZE,
    DEFAULT_GROUND_TRUTH_ROLLOUTS,
    collect_off_policy_dataset,
    collect_on_policy_dataset,
)
from apps.analysis.prediction import (
    DatasetKind,
    ModelKind,
    critic_predictor,
    prediction_error_report,
    q_truth_fn,
    reward_net_predictor,
)
from apps.core.utils import derive_rng, derive_seed
from apps.envs.registry import make_env
from apps.learners.registry import Algorithm

from .runner import train_learner

logger = logging.getLogger(__name__)

ANALYSIS_STREAM = 1


def prediction_error_study(config, seed=None, n_samples=DEFAULT_DATASET_SIZE,
                           n_rollouts=DEFAULT_GROUND_TRUTH_ROLLOUTS):
    """
    Train Dr.ReinforceR and COMA for one seed, then measure both models.

    Datasets are gathered after training from the frozen policies.

    Returns:
        List of (env, n_agents, PredictionErrorReport), reward network first
    """
    seed = config.seeds[0] if seed is None else seed
    reward_config = replace(config, algorithm=Algorithm.DR_REINFORCE_R, policy_lr=None, critic_lr=None)
    critic_config = replace(config, algorithm=Algorithm.COMA, policy_lr=None, critic_lr=None)
    reward_learner, _ = train_learner(reward_config.resolved(), seed)
    critic_learner, _ = train_learner(critic_config.resolved(), seed)

    env = make_env(config.env, config.n_agents)
    rng = derive_rng(derive_seed(config.master_seed, seed), ANALYSIS_STREAM)
    off_policy = collect_off_policy_dataset(env, config.n_agents, n_samples, rng)
    datasets = {
        ModelKind.REWARD_NET: (
            reward_net_predictor(reward_learner.reward_net, env),
            collect_on_policy_dataset(reward_learner.joint_policy, env, n_samples, rng, config.horizon),
            env.exact_reward,
        ),
        ModelKind.Q_CRITIC: (
            critic_predictor(critic_learner.critic, env),
            collect_on_policy_dataset(critic_learner.joint_policy, env, n_samples, rng, config.horizon),
            q_truth_fn(env, critic_learner.joint_policy, rng, config.gamma, n_rollouts, config.horizon),
        ),
    }
    rows = []
    for model_kind, (predict_fn, on_policy, truth_fn) in datasets.items():
        for dataset_kind, dataset in ((DatasetKind.ON_POLICY, on_policy), (DatasetKind.OFF_POLICY, off_policy)):
            report = prediction_error_report(predict_fn, dataset, truth_fn, dataset_kind, model_kind)
            logger.info(
                f"{model_kind} {dataset_kind}: normalized mean error {report.mean:.4f} "
                f"(std {report.std:.4f}, mean abs {report.mean_abs:.4f})"
            )
            rows.append((config.env, config.n_agents, report))
    return rows


def lower_error_model(rows, dataset_kind=DatasetKind.OFF_POLICY):
    """
    Model kind with the smaller normalized mean absolute error on ``dataset_kind``.

    None when a report is degenerate (constant ground truth).
    """
    reports = [report for _, _, report in rows if report.dataset_kind == dataset_kind]
    if not reports or not all(report.ok for report in reports):
        return None
    return min(reports, key=lambda report: report.mean_abs).model_kind
