"""Tests for the configuration layer, the command line and the exports"""

import json
import os
import numpy as np
import pytest
from initialization import (DEFAULT_SETTINGS, extract_settings,
                            initialization)
from main import run_command
from util.checks import check_settings
from util.export import (write_csv, read_csv, save_map_csv, save_map_pgm,
                         format_value)
from util.general import parse_override, check_type, extract_json

FAST = ["--set", "trainSize=4", "--set", "testSize=2", "--set", "epochs=1",
        "--set", "T=2", "--set", "n=2", "--set", "trainDataPool=2",
        "--set", "contextDim=4", "--set", 'metrics=["NEG"]', "--quiet"]


class TestOverrides:

    def test_json_values(self):
        assert parse_override("T=4") == ("T", 4)
        assert parse_override("stepSize=0.01") == ("stepSize", 0.01)
        assert parse_override("layers=[1, -1]") == ("layers", [1, -1])
        assert parse_override("sharedContext=false") == ("sharedContext",
                                                         False)

    def test_plain_strings(self):
        assert parse_override("metric=NEG") == ("metric", "NEG")
        assert parse_override("outputDir=a=b") == ("outputDir", "a=b")

    def test_malformed(self):
        with pytest.raises(ValueError):
            parse_override("T")
        with pytest.raises(ValueError):
            parse_override("=4")


class TestSettings:

    def test_precedence(self, monkeypatch):
        monkeypatch.delenv("BEE_SEED", raising=False)
        with pytest.warns(UserWarning):
            settings = extract_settings({"T": 3, "n": 7}, {"n": 9})
        assert settings["T"] == 3
        assert settings["n"] == 9
        assert settings["epochs"] == DEFAULT_SETTINGS["epochs"]

    def test_seed_precedence(self, monkeypatch):
        monkeypatch.setenv("BEE_SEED", "11")
        config = {**DEFAULT_SETTINGS, "masterSeed": 5}
        assert extract_settings(config)["masterSeed"] == 11
        assert extract_settings(config, {"masterSeed": 13})["masterSeed"] \
            == 13

    def test_invalid_env_seed(self, monkeypatch):
        monkeypatch.setenv("BEE_SEED", "eleven")
        with pytest.raises(ValueError):
            extract_settings(dict(DEFAULT_SETTINGS))

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            extract_settings({"temperature": 1.0})
        with pytest.raises(ValueError):
            extract_settings({}, {"temperature": 1.0})

    def test_comment_keys_ignored(self, monkeypatch):
        monkeypatch.delenv("BEE_SEED", raising=False)
        config = {**DEFAULT_SETTINGS, "_info": "comment"}
        assert "_info" not in extract_settings(config)

    def test_defaults_pass_checks(self):
        assert check_settings(dict(DEFAULT_SETTINGS))

    @pytest.mark.parametrize("key,value,error", [
        ("T", 0, ValueError), ("T", 2.5, TypeError), ("T", True, TypeError),
        ("psi", "sum", ValueError), ("metrics", ["XYZ"], ValueError),
        ("methods", [], ValueError), ("stepSize", 0.0, ValueError),
        ("blurSigmaRange", [5.0, 1.0], ValueError),
        ("layers", "last", TypeError), ("strategy", "greedy", ValueError),
        ("ablationN", [0], ValueError)])
    def test_invalid_values(self, key, value, error):
        with pytest.raises(error):
            check_settings({**DEFAULT_SETTINGS, key: value})

    def test_check_type(self):
        check_type(3, int)
        check_type(2.0, (int, float))
        with pytest.raises(TypeError):
            check_type("3", int)

    def test_config_file(self, tmp_path, monkeypatch):
        monkeypatch.delenv("BEE_SEED", raising=False)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({**DEFAULT_SETTINGS, "T": 5,
                                      "outputDir": str(tmp_path / "out")}))
        paths, settings = initialization(str(config), {"n": 3},
                                         verbose=False)
        assert (settings["T"], settings["n"]) == (5, 3)
        assert os.path.isfile(os.path.join(paths["logsDir"],
                                           "settings.json"))

    def test_malformed_config_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text('{"T": 5,')
        with pytest.raises(ValueError):
            extract_json(str(config))


class TestCommands:

    def test_unknown_command(self, tmp_path):
        assert run_command(["train", "--out", str(tmp_path)]) == 1

    def test_bad_override(self, tmp_path):
        assert run_command(["pretrain", "--set", "T", "--out",
                            str(tmp_path)]) == 1
        assert run_command(["pretrain", "--set", "T=0", "--out",
                            str(tmp_path)]) == 1

    def test_layer_set_is_a_config_error(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["pretrain", "--out", out, "--set", "layers=[9]"]
                           + FAST) == 1
        assert run_command(["pretrain", "--out", out, "--set",
                            "model=tiny_attention", "--set", "layers=[1]"]
                           + FAST) == 1
        assert not os.path.isfile(os.path.join(out, "snapshot.json"))

    def test_missing_snapshot(self, tmp_path):
        assert run_command(["explain", "--out", str(tmp_path), "--quiet"]) \
            == 1

    def test_snapshot_free_strategies(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["explain", "--out", out, "--set",
                            "strategy=nBEE"] + FAST) == 0
        assert os.path.isfile(os.path.join(out, "explain", "map.pgm"))

    def test_single_trial_log(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["explain", "--out", out, "--set",
                            "strategy=nBEE"] + FAST + ["--set", "T=1"]) == 0
        _, rows = read_csv(os.path.join(out, "explain", "trials.csv"))
        assert len(rows) == 1

    def test_grid_image(self, tmp_path):
        out = str(tmp_path)
        image = str(tmp_path / "image.csv")
        grid = np.random.default_rng(0).normal(0.0, 0.5, (48, 16))
        np.savetxt(image, grid, delimiter=",")
        assert run_command(["explain", "--out", out, "--image", image,
                            "--label", "2", "--set", "strategy=Blur"]
                           + FAST) == 0
        assert os.path.isfile(os.path.join(out, "explain", "map.csv"))

        np.savetxt(image, grid[:, :8], delimiter=",")
        assert run_command(["explain", "--out", out, "--image", image,
                            "--set", "strategy=Blur"] + FAST) == 1
        assert run_command(["explain", "--out", out, "--image",
                            str(tmp_path / "missing.csv")] + FAST) == 1
        assert run_command(["curves", "--out", out, "--image", image]
                           + FAST) == 1

    def test_eval_is_deterministic(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["pretrain", "--out", out] + FAST) == 0

        names = ("results.csv", "win_rates.csv", "arm_scores.csv")
        outputs = []
        for _ in range(2):
            assert run_command(["eval", "--out", out] + FAST) == 0
            outputs.append([(tmp_path / name).read_bytes() for name in names])
        assert outputs[0] == outputs[1]

    def test_pretrain_then_explain(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["pretrain", "--out", out] + FAST) == 0
        assert os.path.isfile(os.path.join(out, "snapshot.json"))

        assert run_command(["explain", "--out", out, "--index", "1"]
                           + FAST) == 0
        header, rows = read_csv(os.path.join(out, "explain", "trials.csv"))
        assert header == ["trial", "type", "score", "reward", "h", "best"]
        assert len(rows) == 2

        assert run_command(["explain", "--out", out, "--index", "5"]
                           + FAST) == 2
        assert run_command(["explain", "--out", out, "--set", "modelSeed=1"]
                           + FAST) == 1

    def test_truncated_snapshot(self, tmp_path):
        out = str(tmp_path)
        with open(os.path.join(out, "snapshot.json"), "w") as f:
            f.write('{"version": 1, "model_seed": 0, "metr')
        assert run_command(["explain", "--out", out] + FAST) == 1

    def test_malformed_snapshot_metrics(self, tmp_path):
        out = str(tmp_path)
        with open(os.path.join(out, "snapshot.json"), "w") as f:
            f.write('{"version": 1, "model_seed": 0, "metrics": [1, 2]}')
        assert run_command(["explain", "--out", out] + FAST) == 1


class TestExports:

    def test_csv_round_trip(self, tmp_path):
        path = str(tmp_path / "table.csv")
        write_csv(path, ["a", "b"], [[1, 0.1], ["x", np.float64(1 / 3)]])
        write_csv(path, ["a", "b"], [[2, 0.5]], mode="a")
        header, rows = read_csv(path)
        assert header == ["a", "b"]
        assert rows == [["1", "0.1"], ["x", repr(1 / 3)], ["2", "0.5"]]
        assert float(rows[1][1]) == 1 / 3

    def test_row_length_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(str(tmp_path / "t.csv"), ["a"], [[1, 2]])

    def test_format_value(self):
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.25) == "0.25"

    def test_map_csv(self, tmp_path, rng):
        path = str(tmp_path / "map.csv")
        map_2d = rng.random((4, 5))
        save_map_csv(map_2d, path)
        np.testing.assert_allclose(np.loadtxt(path, delimiter=","), map_2d,
                                   rtol=1e-9)

    def test_map_pgm(self, tmp_path):
        path = tmp_path / "map.pgm"
        save_map_pgm(np.array([[0.0, 0.5], [1.0, 0.25]]), str(path))
        tokens = path.read_text().split()
        assert tokens[:4] == ["P2", "2", "2", "255"]
        assert [int(t) for t in tokens[4:]] == [0, 128, 255, 64]

        save_map_pgm(np.full((2, 3), 0.7), str(path))
        assert path.read_text().split()[4:] == ["0"] * 6

    def test_map_dimension_checked(self, tmp_path):
        with pytest.raises(ValueError):
            save_map_pgm(np.zeros((2, 2, 2)), str(tmp_path / "m.pgm"))
