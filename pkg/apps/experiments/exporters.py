"""
CSV and manifest writers for run outputs.
"""
import csv
import logging
from pathlib import Path

import numpy as np

from apps.core.exceptions import ContractViolation

from .config import DIVERGED_KEY_PREFIX
from .runner import LearningCurve
from .summary import SummaryTable

logger = logging.getLogger(__name__)

CURVE_FILE = "curve.csv"
SUMMARY_FILE = "summary.csv"
ERRORS_FILE = "errors.csv"
NOISE_FILE = "noise.csv"
MANIFEST_FILE = "manifest.txt"


def _number(value):
    return repr(float(value))


def write_curve(curve, output_dir):
    """curve.csv: seed, episode, reward; one row per (completed seed, episode)."""
    path = Path(output_dir) / CURVE_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["seed", "episode", "reward"])
        for seed, rewards in zip(curve.seeds, curve.rewards):
            for episode, reward in enumerate(rewards):
                writer.writerow([seed, episode, _number(reward)])
    logger.info(f"learning curve written to {path}")
    return path


def read_curve(path, label=None):
    """Load a curve.csv back into a LearningCurve."""
    path = Path(path)
    per_seed = {}
    with path.open(newline="") as handle:
        for row in csv.DictReader(handle):
            per_seed.setdefault(int(row["seed"]), []).append(float(row["reward"]))
    lengths = {len(values) for values in per_seed.values()}
    if len(lengths) > 1:
        raise ContractViolation(f"{path}: seeds have different episode counts")
    seeds = tuple(per_seed)
    rewards = np.array([per_seed[s] for s in seeds], dtype=np.float64).reshape(len(seeds), -1)
    return LearningCurve(seeds=seeds, rewards=rewards, label=dict(label or {}))


def write_summary(table, output_dir):
    """summary.csv: episode, mean, ci_low, ci_high (empty bounds when undefined)."""
    path = Path(output_dir) / SUMMARY_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["episode", "mean", "ci_low", "ci_high"])
        for episode, mean, low, high in table.rows():
            bounds = [_number(low), _number(high)] if table.interval_defined else ["", ""]
            writer.writerow([episode, _number(mean), *bounds])
    return path


def read_summary(path, label=None, confidence=0.90):
    path = Path(path)
    columns = {"episode": [], "mean": [], "ci_low": [], "ci_high": []}
    with path.open(newline="") as handle:
        for row in csv.DictReader(handle):
            for key in columns:
                columns[key].append(float(row[key]) if row[key] != "" else np.nan)
    defined = bool(columns["ci_low"]) and not np.isnan(columns["ci_low"]).all()
    return SummaryTable(
        episode=np.array(columns["episode"], dtype=np.int64),
        mean=np.array(columns["mean"]),
        ci_low=np.array(columns["ci_low"]),
        ci_high=np.array(columns["ci_high"]),
        n_seeds=2 if defined else 1,
        confidence=confidence,
        label=dict(label or {}),
    )


def write_errors(rows, output_dir):
    """
    errors.csv: one row per (environment, N, model_kind, dataset_kind).

    Args:
        rows: Iterable of (env, n_agents, PredictionErrorReport)
    """
    path = Path(output_dir) / ERRORS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["env", "n_agents", "model_kind", "dataset_kind", "mean", "std", "normalizer", "n",
             "mean_abs", "p5", "p25", "p50", "p75", "p95", "error"]
        )
        for env, n_agents, report in rows:
            percentiles = [_number(report.percentiles[p]) if report.ok else "" for p in (5, 25, 50, 75, 95)]
            writer.writerow(
                [env, n_agents, report.model_kind, report.dataset_kind, _number(report.mean), _number(report.std),
                 _number(report.normalizer), report.sample_count, _number(report.mean_abs), *percentiles,
                 report.error]
            )
    logger.info(f"prediction errors written to {path}")
    return path


def write_noise(rows, output_dir):
    """
    noise.csv: one row per (profile, sample_id).

    Args:
        rows: Iterable of (NoiseProfile, NoiseRow)
    """
    path = Path(output_dir) / NOISE_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["profile", "scale", "sample_id", "true_difference", "mean_noisy_difference", "variance",
             "standard_error", "biased"]
        )
        for profile, row in rows:
            writer.writerow(
                [profile.kind.value, _number(profile.scale), row.sample_id, _number(row.true_difference),
                 _number(row.mean_noisy_difference), _number(row.variance), _number(row.standard_error),
                 int(row.significant())]
            )
    logger.info(f"noise study written to {path}")
    return path


def write_manifest(config, output_dir, failures=()):
    """
    manifest.txt: the resolved config as key=value lines, then the run status
    and one ``diverged.<seed>`` line per failed seed.
    """
    path = Path(output_dir) / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = list(config.to_lines())
    lines.append(f"status={'partial' if failures else 'completed'}")
    lines.append(f"failed_seeds={','.join(str(f.seed) for f in failures)}")
    for failure in failures:
        diagnostic = " ".join(failure.diagnostic.split())
        lines.append(f"{DIVERGED_KEY_PREFIX}{failure.seed}={diagnostic}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_gridsearch(result, output_dir):
    """gridsearch.csv: the ranked cells, best first."""
    path = Path(output_dir) / "gridsearch.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["rank", "policy_lr", "critic_lr", "score", "diverged_seeds"])
        for rank, cell in enumerate(result.cells, start=1):
            critic = "" if cell.critic_lr is None else _number(cell.critic_lr)
            writer.writerow(
                [rank, _number(cell.policy_lr), critic, _number(cell.score), ",".join(map(str, cell.diverged_seeds))]
            )
    return path
