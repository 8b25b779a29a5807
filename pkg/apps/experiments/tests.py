import csv
import logging
import math
from io import StringIO
from pathlib import Path

import factory
import numpy as np
import pytest
from decouple import RepositoryEnv
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.analysis.prediction import DatasetKind, ModelKind, PredictionErrorReport
from apps.core.exceptions import ChartError, ConfigurationError, InsufficientDataError, NumericalDivergenceError
from apps.experiments import runner, utils
from apps.experiments.charts import emit_chart, emit_charts
from apps.experiments.config import (
    DEFAULT_LEARNING_RATES,
    RunConfig,
    check_default_rate_ordering,
    default_episodes,
)
from apps.experiments.exporters import (
    CURVE_FILE,
    MANIFEST_FILE,
    SUMMARY_FILE,
    read_curve,
    write_curve,
    write_manifest,
    write_summary,
)
from apps.experiments.gridsearch import GridCell, gridsearch, rank_cells, rate_grid
from apps.experiments.models import ExperimentRun, SeedOutcome
from apps.experiments.runner import LearningCurve, SeedResult
from apps.experiments.studies import lower_error_model, prediction_error_study
from apps.experiments.summary import summarize, trailing_mean, z_value


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRun

    verb = ExperimentRun.Verb.TRAIN
    environment = "multi_rover"
    algorithm = "dr_reinforce"
    n_agents = 3
    status = ExperimentRun.Status.COMPLETED
    output_dir = factory.Sequence(lambda n: f"runs/run-{n}")


class SeedOutcomeFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = SeedOutcome

    run = factory.SubFactory(ExperimentRunFactory)
    seed = factory.Sequence(lambda n: n)
    episodes_completed = 100
    final_decile_reward = -1.5


def tiny_config(**overrides):
    values = {
        "env": "multi_rover",
        "algorithm": "dr_reinforce",
        "n_agents": 2,
        "n_episodes": 3,
        "horizon": 5,
        "seeds": (0, 1),
        "policy_hidden": 4,
        "critic_hidden": 8,
        "smoothing_window": 2,
    }
    values.update(overrides)
    return RunConfig(**values)


def tiny_train_args(output_dir, *extra):
    return [
        "--env", "multi_rover", "--algorithm", "dr_reinforce", "--n-agents", "2", "--episodes", "3",
        "--horizon", "5", "--seeds", "0,1", "--policy-hidden", "4", "--output-dir", str(output_dir), *extra,
    ]


def table(values, label=None):
    return summarize(LearningCurve(seeds=tuple(range(len(values))), rewards=values, label=label or {}))


class TestRunConfig:
    def test_from_values_parses_strings(self):
        config = RunConfig.from_values({"n_agents": "5", "gamma": "0.9", "seeds": "3,1,2", "critic_lr": "none"})
        assert config.n_agents == 5
        assert config.gamma == 0.9
        assert config.seeds == (3, 1, 2)
        assert config.critic_lr is None

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            RunConfig.from_values({"learning_rate": "0.1"})

    def test_invalid_value(self):
        with pytest.raises(ConfigurationError):
            RunConfig.from_values({"n_agents": "three"})

    def test_file_values_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("env=predator_prey\nalgorithm=coma\nn_agents=5\nseeds=4,5\n")
        config = RunConfig.from_file(path, {"n_agents": 8, "gamma": None})
        assert config.env == "predator_prey"
        assert config.n_agents == 8
        assert config.seeds == (4, 5)
        assert config.gamma == 0.95

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(tmp_path / "absent.cfg")

    def test_resolved_defaults(self, settings):
        config = RunConfig(env="multi_rover", algorithm="dr_reinforce_r").resolved()
        assert config.n_episodes == 20_000
        assert (config.policy_lr, config.critic_lr) == (5e-4, 25e-3)
        assert config.seeds == tuple(range(10))
        assert Path(config.output_dir) == Path(settings.DRLAB_OUTPUT_ROOT) / "multi_rover-N3" / "dr_reinforce_r"

    def test_episode_budget_grows_with_team(self):
        assert default_episodes(3) == 20_000
        assert default_episodes(5) == default_episodes(8) == 40_000

    def test_critic_free_methods_need_no_critic_rate(self):
        assert RunConfig(algorithm="reinforce", env="predator_prey").resolved().critic_lr is None

    @pytest.mark.parametrize(
        "overrides",
        [{"gamma": 0.0}, {"seeds": (1, 1)}, {"confidence": 1.0}, {"n_agents": 1}, {"policy_lr": -1e-3}],
    )
    def test_validation(self, overrides):
        with pytest.raises(ConfigurationError):
            RunConfig(**overrides).resolved()

    def test_unknown_environment(self):
        with pytest.raises(ConfigurationError):
            RunConfig(env="traffic").resolved()

    def test_slow_critic_override_only_warns(self, app_logs):
        with app_logs.at_level(logging.WARNING, logger="apps.experiments.config"):
            config = RunConfig(algorithm="coma", policy_lr=1e-3, critic_lr=1e-4).resolved()
        assert config.critic_lr == 1e-4
        assert "below the policy learning rate" in app_logs.text

    def test_default_rates_keep_critics_fast(self):
        check_default_rate_ordering()
        assert DEFAULT_LEARNING_RATES[("coma", "multi_rover")] == (5e-5, 5e-4)

    def test_lines_are_readable_as_config(self, tmp_path):
        config = tiny_config().resolved()
        path = tmp_path / "copy.cfg"
        path.write_text("\n".join(config.to_lines()) + "\n")
        assert RunConfig.from_file(path) == config


class TestSummary:
    def test_two_seeds_interval(self):
        summary = table(np.array([[0.0], [2.0]]))
        assert summary.mean[0] == 1.0
        assert summary.ci_high[0] - summary.mean[0] == pytest.approx(1.6448536, abs=1e-6)
        assert summary.interval_defined

    def test_zero_confidence_collapses_interval(self):
        summary = summarize(np.array([[0.0, 1.0], [2.0, 3.0]]), confidence=0.0)
        np.testing.assert_array_equal(summary.ci_low, summary.mean)
        np.testing.assert_array_equal(summary.ci_high, summary.mean)

    def test_single_seed(self, app_logs):
        with app_logs.at_level(logging.WARNING, logger="apps.experiments.summary"):
            summary = summarize(np.array([[1.0, 2.0]]))
        assert not summary.interval_defined
        assert np.isnan(summary.ci_low).all()
        assert "undefined" in app_logs.text

    def test_no_seeds(self):
        with pytest.raises(InsufficientDataError):
            summarize(np.zeros((0, 4)))

    def test_confidence_range(self):
        with pytest.raises(ConfigurationError):
            z_value(1.0)

    def test_trailing_mean(self):
        np.testing.assert_allclose(trailing_mean([1.0, 2.0, 3.0, 4.0], 2), [1.0, 1.5, 2.5, 3.5])
        np.testing.assert_array_equal(trailing_mean([1.0, 5.0], 1), [1.0, 5.0])

    def test_smoothing_applies_per_seed(self):
        summary = summarize(np.array([[0.0, 2.0], [4.0, 6.0]]), smoothing_window=2)
        np.testing.assert_allclose(summary.mean, [2.0, 3.0])


class TestCharts:
    def test_empty_input(self, tmp_path):
        with pytest.raises(ChartError):
            emit_chart([], tmp_path / "empty.svg")

    def test_identical_inputs_give_identical_bytes(self, tmp_path):
        tables = [table(np.array([[0.0, 1.0, 2.0], [1.0, 1.5, 3.0]]), {"algorithm": "dr_reinforce"})]
        first = emit_chart(tables, tmp_path / "a.svg", title="multi_rover, N=3")
        second = emit_chart(tables, tmp_path / "b.svg", title="multi_rover, N=3")
        assert first.read_bytes() == second.read_bytes()

    def test_single_episode_series(self, tmp_path):
        path = emit_chart([table(np.array([[0.5]]))], tmp_path / "point.svg")
        assert path.read_text().lstrip().startswith("<?xml")

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(ChartError):
            emit_chart([table(np.array([[0.0, 1.0]]))], tmp_path / "missing" / "chart.svg")

    def test_one_chart_per_environment_and_team(self, tmp_path):
        tables = [
            table(np.ones((2, 3)), {"env": "multi_rover", "n_agents": 3, "algorithm": "coma"}),
            table(np.zeros((2, 3)), {"env": "multi_rover", "n_agents": 3, "algorithm": "colby"}),
            table(np.ones((2, 3)), {"env": "predator_prey", "n_agents": 5, "algorithm": "coma"}),
        ]
        paths = emit_charts(tables, tmp_path / "charts")
        assert sorted(p.name for p in paths) == ["multi_rover-N3.svg", "predator_prey-N5.svg"]


class TestExporters:
    def test_curve_file(self, tmp_path):
        curve = LearningCurve(seeds=(4, 7), rewards=np.array([[0.1, -0.25], [1.0, 2.0]]))
        path = write_curve(curve, tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "seed,episode,reward"
        assert lines[1] == "4,0,0.1"
        assert len(lines) == 5
        loaded = read_curve(path)
        assert loaded.seeds == (4, 7)
        np.testing.assert_array_equal(loaded.rewards, curve.rewards)

    def test_single_seed_summary_leaves_bounds_empty(self, tmp_path):
        path = write_summary(summarize(np.array([[1.0, 2.0]])), tmp_path)
        with path.open() as handle:
            rows = list(csv.DictReader(handle))
        assert rows[1] == {"episode": "1", "mean": "2.0", "ci_low": "", "ci_high": ""}

    def test_manifest_records_failures(self, tmp_path):
        failure = SeedResult(seed=3, rewards=[], status="diverged", diagnostic="policy 0:\nnon-finite")
        path = write_manifest(tiny_config().resolved(), tmp_path, [failure])
        data = RepositoryEnv(str(path)).data
        assert data["status"] == "partial"
        assert data["failed_seeds"] == "3"
        assert data["diverged.3"] == "policy 0: non-finite"
        assert data["algorithm"] == "dr_reinforce"

    def test_manifest_reads_back_as_config(self, tmp_path):
        config = tiny_config().resolved()
        failure = SeedResult(seed=1, rewards=[], status="diverged", diagnostic="critic: non-finite")
        path = write_manifest(config, tmp_path, [failure])
        assert RunConfig.from_file(path) == config
        assert RunConfig.from_file(path, {"n_agents": 4}).n_agents == 4


class TestSafeGroupExecute:
    def test_falls_back_when_broker_is_down(self, monkeypatch):
        def unreachable(*args, **kwargs):
            raise ConnectionError("Connection refused")

        def square(x):
            return x * x

        monkeypatch.setattr(utils, "group", unreachable)
        assert utils.safe_group_execute(square, [(2,), (3,)]) == [4, 9]

    def test_other_errors_propagate(self, monkeypatch):
        def broken(*args, **kwargs):
            raise KeyError("bad signature")

        monkeypatch.setattr(utils, "group", broken)
        with pytest.raises(KeyError):
            utils.safe_group_execute(abs, [(1,)])

    def test_broker_error_detection(self):
        assert utils.is_broker_error(OSError("timeout"))
        assert not utils.is_broker_error(ValueError("shape mismatch"))


class TestGridsearch:
    def test_ranking(self):
        cells = [
            GridCell(5e-4, None, 1.0),
            GridCell(1e-4, None, 1.0),
            GridCell(5e-3, None, -math.inf, diverged_seeds=(0,)),
            GridCell(25e-3, None, 2.0),
        ]
        ranked = rank_cells(cells)
        assert [c.policy_lr for c in ranked] == [25e-3, 1e-4, 5e-4, 5e-3]

    def test_grid_size(self):
        assert len(rate_grid("reinforce")) == 6
        assert len(rate_grid("coma")) == 36
        assert rate_grid("dr_reinforce", policy_rates=(1e-3,)) == [(1e-3, None)]

    @pytest.mark.django_db
    def test_small_search(self):
        base = tiny_config(algorithm="reinforce", n_episodes=2, horizon=3)
        result = gridsearch(base, [(1e-3, None), (1e-2, None)], n_seeds=2)
        assert len(result.cells) == 2
        assert result.best[1] is None
        assert all(len(cell.diverged_seeds) == 0 for cell in result.cells)


@pytest.mark.django_db
class TestTrainCommand:
    def test_identical_configs_give_identical_curves(self, tmp_path):
        for name in ("first", "second"):
            call_command("train", *tiny_train_args(tmp_path / name), stdout=StringIO())
        first = (tmp_path / "first" / CURVE_FILE).read_bytes()
        assert first == (tmp_path / "second" / CURVE_FILE).read_bytes()
        assert len(first.decode().splitlines()) == 1 + 2 * 3

    def test_outputs_and_bookkeeping(self, tmp_path):
        call_command("train", *tiny_train_args(tmp_path, "--manifest", "--snapshots"), stdout=StringIO())
        assert (tmp_path / SUMMARY_FILE).is_file()
        assert RepositoryEnv(str(tmp_path / MANIFEST_FILE)).data["status"] == "completed"
        assert (tmp_path / "snapshots" / "seed_1" / "policies.bin").is_file()
        run_record = ExperimentRun.objects.get()
        assert run_record.status == ExperimentRun.Status.COMPLETED
        assert run_record.seed_outcomes.count() == 2

    def test_diverged_seed_is_reported(self, tmp_path, monkeypatch):
        train_learner = runner.train_learner

        def diverge_on_seed_one(config, seed, **kwargs):
            if seed == 1:
                raise NumericalDivergenceError("parameters became non-finite", label="policy 0")
            return train_learner(config, seed, **kwargs)

        monkeypatch.setattr(runner, "train_learner", diverge_on_seed_one)
        with pytest.raises(CommandError):
            call_command("train", *tiny_train_args(tmp_path), stdout=StringIO())
        manifest = RepositoryEnv(str(tmp_path / MANIFEST_FILE)).data
        assert manifest["failed_seeds"] == "1"
        assert "diverged.1" in manifest
        assert {row.split(",")[0] for row in (tmp_path / CURVE_FILE).read_text().splitlines()[1:]} == {"0"}
        run_record = ExperimentRun.objects.get()
        assert run_record.status == ExperimentRun.Status.PARTIAL
        assert run_record.get_failed_seeds() == [1]

    def test_invalid_flags(self, tmp_path):
        with pytest.raises(CommandError):
            call_command("train", *tiny_train_args(tmp_path, "--gamma", "1.5"), stdout=StringIO())

    def test_chart_from_run_directories(self, tmp_path):
        call_command("train", *tiny_train_args(tmp_path / "run", "--manifest"), stdout=StringIO())
        call_command("chart", str(tmp_path / "run"), "--output-dir", str(tmp_path / "charts"), stdout=StringIO())
        assert (tmp_path / "charts" / "multi_rover-N2.svg").is_file()

    def test_manifest_replays_as_config(self, tmp_path):
        call_command("train", *tiny_train_args(tmp_path / "first", "--manifest"), stdout=StringIO())
        call_command(
            "train", "--config", str(tmp_path / "first" / MANIFEST_FILE), "--output-dir", str(tmp_path / "second"),
            stdout=StringIO(),
        )
        assert (tmp_path / "first" / CURVE_FILE).read_bytes() == (tmp_path / "second" / CURVE_FILE).read_bytes()


@pytest.mark.django_db
class TestStudyCommands:
    def test_noise(self, tmp_path):
        call_command(
            "noise", "--env", "predator_prey", "--n-agents", "2", "--noise-samples", "20", "--state-samples", "4",
            "--output-dir", str(tmp_path), stdout=StringIO(),
        )
        lines = (tmp_path / "noise.csv").read_text().splitlines()
        assert len(lines) == 1 + 3 * 4
        run_record = ExperimentRun.objects.get()
        assert run_record.verb == ExperimentRun.Verb.NOISE
        assert run_record.status == ExperimentRun.Status.COMPLETED

    def test_unknown_noise_kind(self, tmp_path):
        with pytest.raises(CommandError):
            call_command("noise", "--kinds", "laplace", "--output-dir", str(tmp_path), stdout=StringIO())
        assert ExperimentRun.objects.get().status == ExperimentRun.Status.FAILED

    def test_gridsearch(self, tmp_path):
        call_command(
            "gridsearch", "--env", "multi_rover", "--algorithm", "reinforce", "--episodes", "2", "--horizon", "3",
            "--policy-hidden", "4", "--policy-rates", "5e-4,1e-3", "--grid-seeds", "1",
            "--output-dir", str(tmp_path), stdout=StringIO(),
        )
        assert len((tmp_path / "gridsearch.csv").read_text().splitlines()) == 3
        run_record = ExperimentRun.objects.get()
        assert run_record.verb == ExperimentRun.Verb.GRIDSEARCH
        assert run_record.status == ExperimentRun.Status.COMPLETED

    def test_analyze(self, tmp_path):
        out = StringIO()
        call_command(
            "analyze", "--env", "multi_rover", "--n-agents", "2", "--episodes", "2", "--horizon", "4",
            "--seeds", "0", "--policy-hidden", "4", "--critic-hidden", "8", "--samples", "6", "--rollouts", "2",
            "--output-dir", str(tmp_path), stdout=out,
        )
        assert "off-policy" in out.getvalue()
        with (tmp_path / "errors.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        assert [(r["model_kind"], r["dataset_kind"]) for r in rows] == [
            ("reward_net", "on_policy"),
            ("reward_net", "off_policy"),
            ("q_critic", "on_policy"),
            ("q_critic", "off_policy"),
        ]
        assert ExperimentRun.objects.get().verb == ExperimentRun.Verb.ANALYZE


def error_report(model_kind, dataset_kind, mean_abs, error=""):
    return PredictionErrorReport(dataset_kind, model_kind, 0.0, 0.0, 1.0, 10, mean_abs=mean_abs, error=error)


class TestErrorComparison:
    def test_picks_smaller_off_policy_error(self):
        rows = [
            ("multi_rover", 3, error_report(ModelKind.REWARD_NET, DatasetKind.ON_POLICY, 0.01)),
            ("multi_rover", 3, error_report(ModelKind.REWARD_NET, DatasetKind.OFF_POLICY, 0.30)),
            ("multi_rover", 3, error_report(ModelKind.Q_CRITIC, DatasetKind.ON_POLICY, 0.50)),
            ("multi_rover", 3, error_report(ModelKind.Q_CRITIC, DatasetKind.OFF_POLICY, 0.20)),
        ]
        assert lower_error_model(rows) == ModelKind.Q_CRITIC
        assert lower_error_model(rows, DatasetKind.ON_POLICY) == ModelKind.REWARD_NET

    def test_degenerate_report_gives_no_winner(self):
        rows = [
            ("multi_rover", 3, error_report(ModelKind.REWARD_NET, DatasetKind.OFF_POLICY, 0.1)),
            ("multi_rover", 3, error_report(ModelKind.Q_CRITIC, DatasetKind.OFF_POLICY, float("nan"), "constant")),
        ]
        assert lower_error_model(rows) is None


@pytest.mark.django_db
class TestModels:
    def test_failed_seeds(self):
        run_record = ExperimentRunFactory(status=ExperimentRun.Status.PARTIAL)
        SeedOutcomeFactory(run=run_record, seed=0)
        SeedOutcomeFactory(run=run_record, seed=4, status=SeedOutcome.Status.DIVERGED, final_decile_reward=None)
        assert run_record.get_failed_seeds() == [4]
        assert str(run_record) == "train dr_reinforce on multi_rover (N=3)"

    def test_seed_outcome_str(self):
        assert str(SeedOutcomeFactory(seed=2)) == "seed 2: completed"


@pytest.mark.acceptance
@pytest.mark.django_db
@pytest.mark.parametrize("env", ["multi_rover", "predator_prey"])
def test_difference_rewards_beat_baselines(env):
    """Desk-scale learning trend: three agents, ten seeds, default budgets."""
    outcomes = {}
    for algorithm in ("dr_reinforce", "reinforce", "dr_reinforce_r", "q_a2c"):
        outcome = runner.run(RunConfig(env=env, algorithm=algorithm, n_agents=3))
        assert not outcome.failures
        outcomes[algorithm] = outcome.curve

    def final_decile(curve):
        tail = max(1, curve.n_episodes // 10)
        per_seed = curve.rewards[:, -tail:].mean(axis=1)
        half_width = z_value(0.9) * per_seed.std(ddof=1) / np.sqrt(per_seed.size)
        return per_seed.mean(), half_width

    dr_mean, dr_width = final_decile(outcomes["dr_reinforce"])
    pg_mean, pg_width = final_decile(outcomes["reinforce"])
    assert dr_mean - pg_mean > dr_width + pg_width
    assert outcomes["dr_reinforce_r"].final_decile_mean() >= outcomes["q_a2c"].final_decile_mean()


@pytest.mark.acceptance
def test_reward_network_beats_critic_off_policy():
    """Multi-rover, three agents: the reward network generalizes better than the Q critic."""
    rows = prediction_error_study(RunConfig(env="multi_rover", n_agents=3).resolved(), n_rollouts=100)
    off_policy = {str(report.model_kind): report.mean_abs for _, _, report in rows
                  if report.dataset_kind == DatasetKind.OFF_POLICY}
    assert off_policy["reward_net"] < off_policy["q_critic"]
    assert lower_error_model(rows) == ModelKind.REWARD_NET
