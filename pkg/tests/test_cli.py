import json
import subprocess
import sys

import pytest

from lgss.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main

SCENARIO = ["--p", "12", "--n-train", "30", "--n-sub", "20", "--n-val", "10", "--n-test", "10", "--s0", "2",
            "--snr", "2", "--mu-beta", "4", "--mu-x", "-2", "--B", "5", "--V", "1", "--n-partitions", "2"]


class TestGen:
    def test_writes_csv_and_truth(self, tmp_path, capsys):
        code = main(["gen", *SCENARIO, "--seed", "3", "--out", str(tmp_path / "d.csv"),
                     "--truth", str(tmp_path / "t.json")])
        assert code == EXIT_OK
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert len(lines) == 51 and lines[0].split(",")[-1] == "y"
        truth = json.loads((tmp_path / "t.json").read_text())
        assert len(truth["support"]) == 2 and min(truth["support"]) >= 1

    def test_invalid_config(self, tmp_path, capsys):
        code = main(["gen", *SCENARIO[:-2], "--n-partitions", "0", "--out", str(tmp_path / "d.csv")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err


class TestRun:
    def test_run(self, tmp_path, capsys):
        code = main(["run", *SCENARIO, "--seed", "1", "--methods", "raw_boost,lss", "--out", str(tmp_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "raw_boost" in out and "lss" in out
        assert (tmp_path / "results.csv").exists() and (tmp_path / "summary.json").exists()

    def test_seed_required(self, tmp_path, capsys):
        assert main(["run", *SCENARIO, "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "--seed" in capsys.readouterr().err

    def test_config_file(self, tmp_path, capsys):
        cfg = {"p": 12, "n_train": 30, "n_sub": 20, "n_val": 10, "s0": 2, "snr": 2, "B": 4, "V": 1,
               "n_partitions": 1, "methods": [{"name": "lss", "m_iter": 20}]}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        code = main(["run", "--config", str(tmp_path / "c.json"), "--seed", "0", "--out", str(tmp_path / "o")])
        assert code == EXIT_OK
        rows = (tmp_path / "o" / "results.csv").read_text().splitlines()
        assert len(rows) == 2 and ",lss," in rows[1]

    def test_unknown_method(self, tmp_path, capsys):
        assert main(["run", *SCENARIO, "--seed", "1", "--methods", "lasso", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--lambda", "3"])
        assert exc.value.code == EXIT_CONFIG


class TestExternalAndReport:
    def make_csv(self, tmp_path):
        assert main(["gen", *SCENARIO, "--seed", "2", "--out", str(tmp_path / "d.csv")]) == EXIT_OK
        return tmp_path / "d.csv"

    def test_run_external_then_report(self, tmp_path, capsys):
        data = self.make_csv(tmp_path)
        code = main(["run-external", "--data", str(data), "--n-train", "30", "--n-val", "10", "--B", "5",
                     "--n-partitions", "2", "--seed", "0", "--methods", "raw_boost,lss",
                     "--out", str(tmp_path / "ext")])
        assert code == EXIT_OK
        capsys.readouterr()
        assert main(["report", "--results", str(tmp_path / "ext" / "results.csv")]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["aggregates"]["lss"]["n_rows"] == 2
        assert doc["aggregates"]["lss"]["mean_precision"] is None

    def test_missing_data_file(self, tmp_path, capsys):
        code = main(["run-external", "--data", str(tmp_path / "nope.csv"), "--n-train", "5", "--n-val", "2",
                     "--seed", "0", "--out", str(tmp_path)])
        assert code == EXIT_DATA

    def test_missing_response(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("a,b\n1,2\n")
        code = main(["run-external", "--data", str(tmp_path / "d.csv"), "--response", "target", "--n-train", "5",
                     "--n-val", "2", "--seed", "0", "--out", str(tmp_path)])
        assert code == EXIT_DATA
        assert "'target'" in capsys.readouterr().err

    def test_report_bad_file(self, tmp_path, capsys):
        (tmp_path / "r.csv").write_text("a,b\n")
        assert main(["report", "--results", str(tmp_path / "r.csv")]) == EXIT_DATA

    def test_select(self, tmp_path, capsys):
        data = self.make_csv(tmp_path)
        capsys.readouterr()
        code = main(["select", "--data", str(data), "--n-val", "10", "--B", "10", "--m-iter", "20", "--seed", "1"])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        model = doc["stable_model"]
        assert model["support"] and model["columns"] == [f"x{j}" for j in model["support"]]
        assert doc["profile"]["B"] == 10

    def test_select_pi_grid_to_file(self, tmp_path, capsys):
        data = self.make_csv(tmp_path)
        out = tmp_path / "sel.json"
        code = main(["select", "--data", str(data), "--n-val", "10", "--B", "10", "--grid", "pi:0.1",
                     "--out", str(out)])
        assert code == EXIT_OK
        assert "stable_model" in json.loads(out.read_text())


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lgss.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("lgss ")
