"""Tests for the data, pretraining, inference, snapshot and experiment steps"""

import copy
import filecmp
import os
import numpy as np
import pytest
from attribution.baselines import BaselineType, BASELINE_TYPES
from attribution.selection import adjusted_score
from bandit.thompson import thompson_select
from dataset import synth_dataset, load_grid_csv
from metrics import get_metric
from initialization import prepare_run, setup_paths
from pretraining import pretrain, pretraining
from inference import (explain_pbee, explain_fbee, explain_instance,
                       finetune_copy, make_sampler, run_trials, explain)
from snapshot import save_snapshot, load_snapshot
from selftest import selftest
from experiments import (rigged_metric, convergence_experiment,
                         evaluate_suite, win_rate_experiment,
                         arm_score_experiment, ablation_sweep, evaluation,
                         curves, ablation, mean_stderr)
from util.export import read_csv


@pytest.fixture
def run(settings):
    return prepare_run(settings, verbose=False)


@pytest.fixture
def metrics(run, settings):
    return {metric_id: run.metrics[metric_id]
            for metric_id in settings["metrics"]}


@pytest.fixture
def states(run, settings, metrics):
    return pretrain(run.builder, run.train, metrics, settings,
                    verbose=False).states


def arm_copy(state) -> dict:
    return {kind: (arm.g.copy(), arm.q.copy())
            for kind, arm in state.arms.items()}


def assert_arms_equal(state, arms: dict):
    for kind, (g, q) in arms.items():
        np.testing.assert_array_equal(state.arms[kind].g, g)
        np.testing.assert_array_equal(state.arms[kind].q, q)


def rigged_states(run, settings, gap: float):
    """Single-map builder, binary rigged metric (Blur wins) and states."""

    builder = run.builder_for({**settings, "n": 1})
    metric = rigged_metric(BaselineType.BLUR, gap=gap, kind="binary")
    states = pretrain(builder, synth_dataset(1, 40), {"RIGGED": metric},
                      {**settings, "epochs": 3, "stepSize": 0.1},
                      verbose=False).states
    return builder, metric, states


class TestDataset:

    def test_seeded_generation(self):
        first = synth_dataset(3, 5)
        second = synth_dataset(3, 5)
        for (x1, y1), (x2, y2) in zip(first.items, second.items):
            np.testing.assert_array_equal(x1, x2)
            assert y1 == y2

    def test_splits_differ(self):
        train = synth_dataset(3, 5, "train")
        test = synth_dataset(3, 5, "test")
        assert not any(np.array_equal(a, b)
                       for a in train.inputs for b in test.inputs)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            synth_dataset(0, 0)
        with pytest.raises(ValueError):
            synth_dataset(0, 3, "validation")

    def test_grid_csv(self, tmp_path):
        path = tmp_path / "image.csv"
        path.write_text("1,2\n3,4\n5,6\n7,8\n")
        dataset = load_grid_csv(str(path), 1, channels=2)
        x, y = dataset[0]
        assert x.shape == (2, 2, 2) and y == 1
        np.testing.assert_array_equal(x[1], [[5.0, 6.0], [7.0, 8.0]])

        path.write_text("1,2\n3,4\n5,6\n")
        with pytest.raises(ValueError):
            load_grid_csv(str(path), 0, channels=2)


class TestPretraining:

    def test_zero_epochs_keep_fresh_states(self, run, settings, metrics):
        result = pretrain(run.builder, run.train, metrics,
                          {**settings, "epochs": 0}, verbose=False)
        for state in result.states.values():
            for arm in state.arms.values():
                np.testing.assert_array_equal(arm.g, 0.0)
                np.testing.assert_array_equal(arm.q, 1.0)
        assert result.log == []

    def test_epoch_updates(self, run, settings, metrics):
        result = pretrain(run.builder, run.train, metrics, settings,
                          verbose=False)
        assert len(result.log) == len(metrics)
        for state in result.states.values():
            for arm in state.arms.values():
                assert np.all(arm.q >= 1.0)
        # NEG is continuous and stores its scores, PIC is binary
        assert len(result.states["NEG"].score_history) == len(run.train)
        assert result.states["PIC"].score_history == []

    def test_shared_context(self, states):
        assert states["NEG"].network is states["PIC"].network

    def test_separate_contexts(self, run, settings, metrics):
        result = pretrain(run.builder, run.train, metrics,
                          {**settings, "sharedContext": False},
                          verbose=False)
        assert result.states["NEG"].network is not \
            result.states["PIC"].network

    def test_rigged_winner_learned(self, run, settings):
        builder, metric, states = rigged_states(run, settings, 0.8)
        test = synth_dataset(2, 40, "test")

        _, table = win_rate_experiment(builder, test, {"RIGGED": metric},
                                       states, 1)
        assert sum(table["RIGGED"].values()) == pytest.approx(1.0,
                                                              abs=1e-12)
        assert table["RIGGED"][BaselineType.BLUR] > 0.5

        rows = arm_score_experiment(test, states, 50)
        means = {row[1]: row[2] for row in rows}
        assert max(means, key=means.get) == BaselineType.BLUR.value

    def test_bandit_reaches_plateau_first(self, run, settings):
        builder, metric, states = rigged_states(run, settings, 1.0)
        iterations = 30
        result = convergence_experiment(builder, synth_dataset(3, 40, "test"),
                                        metric, ["Blur", "fBEE", "nBEE"],
                                        iterations, states)
        target = 0.95 * result["Blur"][-1]

        def reached(curve) -> int:
            hits = np.flatnonzero(np.asarray(curve) >= target)
            return int(hits[0]) + 1 if hits.size else iterations + 1

        assert reached(result["fBEE"]) <= reached(result["nBEE"]) / 2


class TestInference:

    def test_pbee_leaves_state_untouched(self, run, states):
        state = states["NEG"]
        arms, history = arm_copy(state), list(state.score_history)
        rng_state = state.rng.bit_generator.state

        x, y = run.test[0]
        result = explain_pbee(state, run.builder, x, y, run.metrics["NEG"], 3,
                              np.random.default_rng(4))

        assert_arms_equal(state, arms)
        assert state.score_history == history
        assert state.rng.bit_generator.state == rng_state
        assert len(result.trials) == 3
        assert all(trial.reward is None for trial in result.trials)
        assert result.best.score == max(trial.score
                                        for trial in result.trials)

    def test_fbee_best_so_far_is_monotonic(self, run, states):
        x, y = run.test[1]
        result = explain_fbee(states["NEG"], run.builder, x, y,
                              run.metrics["NEG"], 4,
                              np.random.default_rng(5))
        bests = [trial.best for trial in result.trials]
        assert all(b >= a for a, b in zip(bests, bests[1:]))
        assert result.best.score == bests[-1]

    def test_pbee_returns_best_of_pool(self, run, states):
        metrics = [run.metrics["NEG"], get_metric("POS")]
        for seed in range(100):
            metric = metrics[seed % 2]
            x, y = run.test[seed % len(run.test)]
            result = explain_pbee(states["NEG"], run.builder, x, y, metric,
                                  3, np.random.default_rng(seed))
            scores = [metric.score(run.model, x, explanation, y)
                      for explanation in result.pool.maps]
            best = max(adjusted_score(score, metric.direction)
                       for score in scores)
            assert adjusted_score(result.best.score, metric.direction) \
                == best

    def test_fbee_runs_are_monotonic(self, run, states):
        metrics = [run.metrics["NEG"], get_metric("POS")]
        for seed in range(100):
            metric = metrics[seed % 2]
            x, y = run.test[seed % len(run.test)]
            result = explain_fbee(states["NEG"], run.builder, x, y, metric, 3,
                                  np.random.default_rng(seed))
            bests = [adjusted_score(trial.best, metric.direction)
                     for trial in result.trials]
            assert all(b >= a for a, b in zip(bests, bests[1:]))

    def test_fbee_leaves_pretrained_state_untouched(self, run, states):
        state = states["NEG"]
        arms, history = arm_copy(state), list(state.score_history)
        theta = {name: value.copy()
                 for name, value in state.network.parameters.items()}

        x, y = run.test[0]
        explain_fbee(state, run.builder, x, y, run.metrics["NEG"], 3,
                     np.random.default_rng(6))

        assert_arms_equal(state, arms)
        assert state.score_history == history
        for name, value in state.network.parameters.items():
            np.testing.assert_array_equal(value, theta[name])

    def test_finetune_copy_history_tail(self, states):
        state = states["NEG"]
        state.score_history[:] = [0.1, 0.2, 0.3]
        rng = np.random.default_rng(0)
        assert finetune_copy(state, rng, 2).score_history == [0.2, 0.3]
        assert finetune_copy(state, rng, 0).score_history == []
        local = finetune_copy(state, rng)
        assert local.finetune and local.network is state.network
        assert local.arms is not state.arms

    def test_fixed_type_strategy(self, run):
        x, y = run.test[0]
        result = explain_instance("Constant", run.builder, run.metrics["NEG"],
                                  x, y, 2, np.random.default_rng(1))
        assert all(trial.kind == BaselineType.CONSTANT
                   for trial in result.trials)

    def test_invalid_strategies(self, run):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            make_sampler("pBEE", run.metrics["NEG"], rng)
        with pytest.raises(ValueError):
            make_sampler("Random", run.metrics["NEG"], rng)

    def test_trial_count(self, run):
        x, y = run.test[0]
        sampler = make_sampler("nBEE", run.metrics["NEG"],
                               np.random.default_rng(0))
        with pytest.raises(ValueError):
            run_trials(sampler, run.builder, run.metrics["NEG"], x, y, 0,
                       np.random.default_rng(0))

    def test_single_trial_returns_its_map(self, run):
        x, y = run.test[0]
        result = explain_instance("Blur", run.builder, run.metrics["NEG"],
                                  x, y, 1, np.random.default_rng(2))
        assert len(result.pool) == 1
        assert result.best.score == result.trials[0].score


class TestSnapshot:

    def test_round_trip_is_byte_identical(self, states, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        save_snapshot(states, 0, str(first))
        loaded = load_snapshot(str(first))
        save_snapshot(loaded.states, loaded.model_seed, str(second))
        assert filecmp.cmp(first, second, shallow=False)

    def test_loaded_state_replays_fbee(self, run, states, tmp_path):
        path = str(tmp_path / "snapshot.json")
        save_snapshot(states, 0, path)
        loaded = load_snapshot(path).states

        x, y = run.test[0]
        original = explain_fbee(states["NEG"], run.builder, x, y,
                                run.metrics["NEG"], 3,
                                np.random.default_rng(8))
        replayed = explain_fbee(loaded["NEG"], run.builder, x, y,
                                run.metrics["NEG"], 3,
                                np.random.default_rng(8))
        np.testing.assert_array_equal(original.best.map, replayed.best.map)

    def test_loaded_state_replays_selections(self, run, states, tmp_path):
        path = str(tmp_path / "snapshot.json")
        save_snapshot(states, 0, path)
        original, loaded = states["NEG"], load_snapshot(path).states["NEG"]

        x, _ = run.test[0]
        context = original.context(x)
        np.testing.assert_array_equal(loaded.context(x), context)

        first, second = np.random.default_rng(11), np.random.default_rng(11)
        assert [thompson_select(original, context, first)
                for _ in range(100)] == \
            [thompson_select(loaded, context, second) for _ in range(100)]

    def test_separate_networks_survive(self, run, settings, metrics,
                                       tmp_path):
        result = pretrain(run.builder, run.train, metrics,
                          {**settings, "sharedContext": False},
                          verbose=False)
        path = str(tmp_path / "snapshot.json")
        save_snapshot(result.states, 0, path)
        loaded = load_snapshot(path).states
        assert loaded["NEG"].network is not loaded["PIC"].network

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_snapshot(str(tmp_path / "missing.json"))

    def test_truncated_file(self, states, tmp_path):
        path = tmp_path / "snapshot.json"
        save_snapshot(states, 0, str(path))
        text = path.read_text()
        path.write_text(text[:len(text) // 2])
        with pytest.raises(ValueError):
            load_snapshot(str(path))

    def test_metrics_field_checked(self, tmp_path):
        path = tmp_path / "snapshot.json"
        path.write_text('{"version": 1, "model_seed": 0, "metrics": []}')
        with pytest.raises(ValueError):
            load_snapshot(str(path))

    def test_version_mismatch(self, states, tmp_path):
        path = tmp_path / "snapshot.json"
        save_snapshot(states, 0, str(path))
        path.write_text(path.read_text().replace('"version": 1',
                                                 '"version": 2'))
        with pytest.raises(ValueError):
            load_snapshot(str(path))

    def test_non_finite_values_rejected(self, states, tmp_path):
        path = tmp_path / "snapshot.json"
        broken = copy.deepcopy(states)
        broken["NEG"].arms[BaselineType.NORMAL].g[0] = np.nan
        with pytest.raises(ValueError):
            save_snapshot(broken, 0, str(path))

        save_snapshot(states, 0, str(path))
        text = path.read_text().replace('"history": [', '"history": [NaN, ', 1)
        path.write_text(text)
        with pytest.raises(ValueError):
            load_snapshot(str(path))


class TestExperiments:

    def test_mean_stderr(self):
        assert mean_stderr([2.0]) == (2.0, 0.0)
        mean, stderr = mean_stderr([1.0, 3.0])
        assert mean == 2.0 and stderr == pytest.approx(1.0)

    def test_rigged_metric(self, run):
        metric = rigged_metric(BaselineType.UNIFORM, gap=0.6, noise=0.0)
        x, y = run.test[0]
        winner = run.builder.build(x, y, BaselineType.UNIFORM,
                                   np.random.default_rng(0))
        loser = run.builder.build(x, y, BaselineType.BLUR,
                                  np.random.default_rng(0))
        assert metric.score(run.model, x, winner, y) == pytest.approx(0.8)
        assert metric.score(run.model, x, loser, y) == pytest.approx(0.2)
        with pytest.raises(ValueError):
            rigged_metric(BaselineType.UNIFORM, gap=1.5)

    def test_convergence_curves(self, run):
        metric = rigged_metric(BaselineType.BLUR, noise=0.05, seed=3)
        result = convergence_experiment(run.builder, run.test, metric,
                                        ["Blur", "Normal", "nBEE"], 3)
        assert set(result) == {"Blur", "Normal", "nBEE"}
        for curve in result.values():
            assert len(curve) == 3
            assert all(b >= a for a, b in zip(curve, curve[1:]))
        assert result["Blur"][-1] > result["Normal"][-1]

    def test_bandit_curves_need_states(self, run):
        with pytest.raises(ValueError):
            convergence_experiment(run.builder, run.test, run.metrics["NEG"],
                                   ["fBEE"], 2)

    def test_suite_rows(self, run, metrics, states):
        methods = ["IG", "ACT-IG", "pBEE", "nBEE"]
        rows = evaluate_suite(run.builder, run.test, metrics, methods, 2,
                              states)
        assert len(rows) == len(methods) * len(metrics)
        for method, metric_id, direction, mean, stderr, count in rows:
            assert count == len(run.test)
            assert 0.0 <= mean <= 100.0
        assert rows == evaluate_suite(run.builder, run.test, metrics,
                                      methods, 2, states)

    def test_suite_input_builder_required(self, run, metrics, states):
        with pytest.raises(ValueError):
            evaluate_suite(run.builder, run.test, metrics, ["IG-fBEE"], 1,
                           states)

    def test_win_rates(self, run, metrics, states):
        records, table = win_rate_experiment(run.builder, run.test, metrics,
                                             states, 2)
        assert len(records) == len(metrics) * len(run.test)
        for row in table.values():
            assert sum(row.values()) == pytest.approx(1.0)

    def test_arm_scores(self, run, states):
        rows = arm_score_experiment(run.test, states, 20)
        assert len(rows) == len(states) * len(BASELINE_TYPES)
        for metric_id, kind, mean, std, samples in rows:
            assert 0.0 <= mean <= 1.0 and std >= 0.0
            assert samples == 20 * len(run.test)
        assert rows == arm_score_experiment(run.test, states, 20)

    def test_ablation_rows(self, run, settings, states):
        rows = ablation_sweep(run.builder, run.test,
                              {"NEG": run.metrics["NEG"]}, states, [1, 2],
                              [3], settings)
        assert [row[:2] for row in rows] == [["T", 1], ["T", 2], ["n", 3]]


class TestStages:

    def test_pipeline_outputs(self, run, settings):
        settings = {**settings, "strategy": "pBEE"}
        paths = setup_paths(settings)

        _, _, result = pretraining(paths, settings, run, verbose=False)
        assert os.path.isfile(paths["snapshot"])
        header, rows = read_csv(paths["trainingLog"])
        assert header[0] == "epoch" and len(rows) == len(settings["metrics"])

        explain(paths, settings, run, result.states, 1, verbose=False)
        for name in ("map.csv", "map.pgm", "trials.csv", "curve.csv"):
            assert os.path.isfile(os.path.join(paths["explainDir"], name))

        evaluation(paths, settings, run, result.states, verbose=False)
        _, rows = read_csv(paths["results"])
        assert len(rows) == len(settings["methods"]) \
            * len(settings["metrics"])
        assert os.path.isfile(paths["winRates"])
        assert os.path.isfile(paths["armScores"])

        curves(paths, settings, run, result.states, verbose=False)
        _, rows = read_csv(paths["curves"])
        assert len(rows) == len(settings["strategies"]) \
            * settings["iterations"]

        ablation(paths, settings, run, result.states, verbose=False)
        assert os.path.isfile(paths["ablation"])

    def test_explain_index_bounds(self, run, settings):
        paths = setup_paths(settings)
        with pytest.raises(ValueError):
            explain(paths, {**settings, "strategy": "nBEE"}, run, {}, 99,
                    verbose=False)

    def test_selftest_passes(self, settings):
        paths = setup_paths(settings)
        _, _, results = selftest(paths, settings, verbose=False)
        assert all(results.values())
        assert os.path.isfile(os.path.join(paths["logsDir"], "selftest.json"))
