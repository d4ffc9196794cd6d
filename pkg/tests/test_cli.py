"""Tests for the command-line interface."""

import json
from pathlib import Path

import pytest

from hydrarm.cli import main
from hydrarm.data import read_runlog
from hydrarm.plant import TrajectoryScript, save_script

U_OFF = [0] * 8
U_FILL = [0, 0, 1, 0, 0, 0, 1, 0]


def write_test_script(path, duration=60.0):
    script = TrajectoryScript(events=(
        (0.0, tuple(U_FILL)), (duration / 2, tuple(U_OFF)),
        (duration, tuple(U_OFF))))
    save_script(script, path)


class TestScripts:
    def test_writes_suite(self, tmp_path, capsys):
        out = tmp_path / "scripts"
        assert main(["scripts", "--out", str(out), "--seed", "0"]) == 0
        files = sorted(out.glob("*.json"))
        assert len(files) >= 5
        total = 0.0
        for f in files:
            events = json.loads(f.read_text())
            assert all(len(e["u"]) == 8 for e in events)
            total += events[-1]["t"]
        assert 50 * 60 <= total <= 60 * 60


class TestCollect:
    def test_row_count_10hz(self, tmp_path):
        script = tmp_path / "s.json"
        write_test_script(script, duration=600.0)
        out = tmp_path / "run.jsonl"
        assert main(["collect", "--script", str(script),
                     "--out", str(out), "--seed", "1"]) == 0
        log = read_runlog(out)
        assert len(log) == 6000  # 10 Hz x 600 s

    def test_bad_script_path(self, tmp_path, capsys):
        rc = main(["collect", "--script", str(tmp_path / "missing.json"),
                   "--out", str(tmp_path / "x.jsonl")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


@pytest.fixture(scope="module")
def small_data_dir(tmp_path_factory):
    """Two short noisy runs, enough for windows on a fast test."""
    root = tmp_path_factory.mktemp("data")
    script = root / "s.json"
    write_test_script(script, duration=90.0)
    for i in range(2):
        main(["collect", "--script", str(script), "--noise",
              "--out", str(root / f"run_{i}.jsonl"), "--seed", str(i)])
    return root


class TestTrainEval:
    def test_round_trip_and_determinism(self, small_data_dir, tmp_path):
        model_a = tmp_path / "a.json"
        model_b = tmp_path / "b.json"
        args = ["train", "ik", "--data", str(small_data_dir),
                "--epochs", "2", "--batch", "8", "--seed", "7"]
        assert main(args + ["--out", str(model_a)]) == 0
        assert main(args + ["--out", str(model_b)]) == 0
        assert model_a.read_bytes() == model_b.read_bytes()

        rep_a = tmp_path / "rep_a"
        rep_b = tmp_path / "rep_b"
        eval_args = ["eval", "ik", "--model", str(model_a),
                     "--data", str(small_data_dir), "--seed", "7"]
        assert main(eval_args + ["--report", str(rep_a)]) == 0
        assert main(eval_args + ["--report", str(rep_b)]) == 0
        for ext in (".csv", ".json"):
            assert rep_a.with_suffix(ext).read_bytes() == \
                rep_b.with_suffix(ext).read_bytes()
        assert rep_a.with_suffix(".png").exists()
        summary = json.loads(rep_a.with_suffix(".json").read_text())
        assert summary["samples"] > 0
        # histogram counts sum to the number of test samples
        rows = rep_a.with_suffix(".csv").read_text().strip().splitlines()[1:]
        assert sum(int(r.split(",")[2]) for r in rows) == summary["samples"]

    def test_kind_mismatch_fails(self, small_data_dir, tmp_path, capsys):
        model = tmp_path / "ik.json"
        main(["train", "ik", "--data", str(small_data_dir),
              "--epochs", "1", "--seed", "0", "--out", str(model)])
        rc = main(["eval", "fk", "--model", str(model),
                   "--data", str(small_data_dir),
                   "--report", str(tmp_path / "r")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "mismatch" in err and "ik" in err and "fk" in err

    def test_env_seed_default(self, small_data_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("HYDRARM_SEED", "9")
        out = tmp_path / "env.jsonl"
        script = small_data_dir / "s.json"
        assert main(["collect", "--script", str(script),
                     "--out", str(out)]) == 0
        # same as an explicit seed 9
        out2 = tmp_path / "explicit.jsonl"
        assert main(["collect", "--script", str(script),
                     "--out", str(out2), "--seed", "9"]) == 0
        assert out.read_bytes() == out2.read_bytes()
