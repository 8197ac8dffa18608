import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dsrlab import cli
from dsrlab.config import RunConfig, thread_count
from dsrlab.errors import ConfigError, OutputError
from dsrlab.output import SCHEMA_VERSION, field_rows, format_value, read_json, write_csv, write_json
from dsrlab.waves import Grid1D, ScalarField, SpinorField


class TestConfig:
    def test_defaults_validate(self):
        cfg = RunConfig().validate()
        assert cfg.params.k == 10.0
        assert cfg.grid_obj.n == 4096

    def test_unknown_keys_named(self):
        with pytest.raises(ConfigError, match="bogus"):
            RunConfig.from_dict({"bogus": 1})
        with pytest.raises(ConfigError, match="physics.'kk'"):
            RunConfig.from_dict({"physics": {"kk": 1}})

    def test_mu_at_one_rejected(self):
        with pytest.raises(ConfigError, match="mu"):
            RunConfig.from_dict({"physics": {"m": 1.0, "k": 1.0}})

    @pytest.mark.parametrize("doc", [
        {"grid": {"n": 1000}},
        {"model": "newtonian"},
        {"experiment": {"sigma": -1}},
        {"experiment": {"frames": 1.5}},
        {"experiment": {"k_list": [10]}},
        {"boost": {"direction": 4}},
        {"boost": {"lambda_max": 9}},
        {"output": {"formats": ["xml"]}},
        {"physics": {"m": "one"}},
        {"physics": 3},
        [1, 2],
    ])
    def test_invalid_values(self, doc):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(doc)

    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"schema_version": 1, "physics": {"k": 20.0}, "branch": "antiparticle"}))
        cfg = RunConfig.load(path)
        assert cfg.params.k == 20.0 and cfg.branch_tag.sign == -1
        assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            RunConfig.load(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            RunConfig.load(bad)

    def test_thread_count(self, monkeypatch):
        monkeypatch.setenv("DSRLAB_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("DSRLAB_THREADS", "zero")
        with pytest.raises(ConfigError):
            thread_count()
        monkeypatch.delenv("DSRLAB_THREADS")
        assert thread_count() >= 1


class TestOutput:
    def test_format_value(self):
        assert format_value(0.1) == "0.10000000000000001"
        assert float(format_value(np.float64(1 / 3))) == 1 / 3
        assert format_value(np.int64(4)) == "4"
        assert format_value(True) == "true"

    def test_csv_round_trip(self, tmp_path):
        values = np.random.default_rng(0).normal(size=(5, 2))
        path = write_csv(tmp_path / "t.csv", ("a", "b"), values)
        raw = path.read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["a", "b"]
        np.testing.assert_array_equal(np.array(rows[1:], float), values)

    def test_header_only(self, tmp_path):
        path = write_csv(tmp_path / "empty.csv", ("t", "x"), [])
        assert path.read_text() == "t,x\n"

    def test_row_length_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "bad.csv", ("a", "b"), [(1.0,)])

    def test_unwritable(self, tmp_path):
        with pytest.raises(OutputError, match="missing"):
            write_csv(tmp_path / "missing" / "t.csv", ("a",), [])
        with pytest.raises(OutputError):
            write_json(tmp_path / "missing" / "t.json", {})

    def test_json_round_trip(self, tmp_path):
        cfg = RunConfig().to_dict()
        payload = {"x": np.float64(0.1), "arr": np.arange(3), "flag": np.bool_(True), "inf": np.inf}
        doc = read_json(write_json(tmp_path / "r.json", payload, cfg))
        assert doc["schema_version"] == SCHEMA_VERSION
        assert doc["config"] == json.loads(json.dumps(cfg))
        assert doc["x"] == 0.1 and doc["arr"] == [0, 1, 2] and doc["flag"] is True
        assert doc["inf"] == "inf"

    def test_snapshot_rows(self):
        g = Grid1D(16, 4.0)
        header, rows = field_rows(ScalarField(g, np.exp(1j * g.x)))
        rows = list(rows)
        assert header == ("x", "re", "im", "density") and len(rows) == 16
        assert rows[0][3] == pytest.approx(1.0)
        header, rows = field_rows(SpinorField(g, np.ones(16), 1j * np.ones(16)))
        assert len(header) == 6 and list(rows)[3][-1] == pytest.approx(2.0)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestCLI:
    def test_dispersion(self, capsys):
        code, out, _ = run(["dispersion", "--model", "ac-truncated", "--p", "0.05"], capsys)
        doc = json.loads(out)
        assert code == 0 and doc["command"] == "dispersion"
        assert doc["group_velocity"] == pytest.approx(0.055, rel=1e-2)

    def test_masses(self, capsys):
        code, out, _ = run(["masses", "--k", "10", "--split", "0.2"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert [r["inertial_mass"] for r in doc["masses"]] == pytest.approx([1 / 1.1, 1 / 0.9], rel=1e-8)
        assert doc["cpt"]["measurements"]["k_lower_bound"] == 10.0

    def test_expand(self, capsys):
        code, out, _ = run(["expand", "--order", "4"], capsys)
        doc = json.loads(out)
        assert code == 0 and doc["coefficients"][2] == pytest.approx(0.55)

    def test_ordinary_boost_reports_drift(self, capsys):
        code, out, _ = run(["boost", "--generator", "ordinary", "--k", "5", "--lambda", "1"], capsys)
        assert code == 0
        assert json.loads(out)["casimir_drift"] == pytest.approx(9.48e-3, rel=1e-3)

    def test_failing_verdict_exits_one(self, capsys):
        # RK4 with a huge step cannot hold the Casimir to 1e-9
        code, _, err = run(["boost", "--step", "0.5", "--lambda", "2", "--p", "1"], capsys)
        assert code == 1
        assert "boost.casimir_drift" in err

    def test_experiment_with_outputs(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("DSRLAB_THREADS", "2")
        code, out, _ = run(["experiment", "cpt-report", "--split", "0.2", "--out", str(tmp_path)], capsys)
        assert code == 0
        doc = read_json(tmp_path / "cpt_report.json")
        assert doc["schema_version"] == SCHEMA_VERSION and doc["passed"]
        assert doc["config"]["experiment"]["split"] == 0.2

    def test_evolve_writes_csv(self, capsys, tmp_path):
        argv = ["evolve", "--n", "1024", "--length", "400", "--t-max", "100", "--frames", "5",
                "--out", str(tmp_path), "--formats", "csv"]
        code, out, _ = run(argv, capsys)
        assert code == 0
        assert not (tmp_path / "evolve.json").exists()
        obs = list(csv.reader((tmp_path / "observables.csv").open()))
        assert obs[0] == ["t", "norm", "mean_x", "var_x"] and len(obs) == 6
        snap = list(csv.reader((tmp_path / "snapshot.csv").open()))
        assert len(snap) == 1025

    def test_table(self, capsys):
        code, out, _ = run(["table"], capsys)
        assert code == 0 and json.loads(out)["passed"]

    def test_experiment_all(self, capsys, monkeypatch):
        monkeypatch.setenv("DSRLAB_THREADS", "4")
        code, out, err = run(["experiment", "all", "--frames", "21"], capsys)
        assert code == 0, err
        assert len(json.loads(out)["reports"]) == 6

    @pytest.mark.parametrize("argv", [["bogus"], ["dispersion", "--bogus", "1"], []])
    def test_usage_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == 2

    def test_config_error(self, capsys):
        code, _, err = run(["dispersion", "--k", "0.5"], capsys)
        assert code == 2 and "mu" in err

    def test_config_file_and_override(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"physics": {"k": 20.0}, "model": "ms"}))
        code, out, _ = run(["dispersion", "--config", str(path), "--k", "40", "--p", "0"], capsys)
        assert code == 0
        assert json.loads(out)["E"] == pytest.approx(1 / (1 + 1 / 40))

    def test_bad_output_directory(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, err = run(["masses", "--out", str(blocker / "sub")], capsys)
        assert code == 2 and "OutputError" in err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "dsrlab", "masses"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["command"] == "masses"
