import csv
import json
import subprocess
import sys

import pytest

from lcfshape.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, THREADS_ENV, main, resolve_threads
from lcfshape.config import ConfigError, parse_config

from test_config import BASE, without

FAST = BASE + """\
  t_grid: [100, 1000, 10000]
optimizer:
  max_evaluations: 6
  restarts: 1
  seed: 0
sample:
  replications: 200
  seed: 7
diagnose:
  n_shapes: 2
  amplitude: 0.01
output:
  directory: unused
"""


@pytest.fixture
def write_cfg(tmp_path):
    def write(text, name="case.yaml"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", cfg, "--out", str(out), *extra])


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestSolve:
    def test_outputs_and_summary(self, write_cfg, tmp_path, capsys):
        assert run("solve", write_cfg(FAST), tmp_path / "a") == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("J = ") and "N_scale = " in out
        names = {p.name for p in (tmp_path / "a").iterdir()}
        assert {"mesh.txt", "mesh.json", "temperature.csv", "displacement.json", "stress.csv", "report.json",
                "cdf.csv", "cdf.gp"} <= names
        assert read_rows(tmp_path / "a" / "cdf.csv")[0] == ["t", "F", "hazard"]

    def test_byte_identical_rerun(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(FAST)
        assert run("solve", cfg, tmp_path / "a") == EXIT_OK
        assert run("solve", cfg, tmp_path / "b") == EXIT_OK
        for p in (tmp_path / "a").iterdir():
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name

    def test_no_load_reports_infinite_scale(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(FAST.replace('"293 + 150*(1 + x)"', '"293"'))
        assert run("solve", cfg, tmp_path) == EXIT_OK
        assert "N_scale = inf" in capsys.readouterr().out
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["J"] == 0.0 and report["N_scale"] == "inf"

    def test_formats_and_gnuplot_switches(self, write_cfg, tmp_path, capsys):
        text = FAST.replace("  directory: unused\n", "  directory: unused\n  formats: [csv]\n  gnuplot: false\n")
        assert run("solve", write_cfg(text), tmp_path) == EXIT_OK
        names = {p.name for p in tmp_path.iterdir()} - {"case.yaml"}
        assert "temperature.csv" in names and "temperature.json" not in names and "cdf.gp" not in names


class TestExitCodes:
    def test_missing_key(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(without(FAST, "sigma_f"))
        assert run("solve", cfg, tmp_path) == EXIT_CONFIG
        assert capsys.readouterr().err.strip() == f"error: {cfg}:7: material: missing required key 'sigma_f'"

    def test_unknown_key(self, write_cfg, tmp_path, capsys):
        assert run("solve", write_cfg(FAST.replace("  seed: 7\n", "  seed: 7\n  sed: 1\n")), tmp_path) == EXIT_CONFIG
        assert "unknown key 'sed'" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run("solve", str(tmp_path / "nope.yaml"), tmp_path) == EXIT_CONFIG

    def test_usage_errors(self, capsys):
        assert main(["solve"]) == EXIT_CONFIG
        assert main(["explode", "--config", "x"]) == EXIT_CONFIG
        assert main([]) == EXIT_CONFIG

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK

    def test_singular_heat_problem(self, write_cfg, tmp_path, capsys):
        assert run("solve", write_cfg(FAST.replace("eta: 100.0", "eta: 0.0")), tmp_path) == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    def test_module_entry_point(self, write_cfg, tmp_path):
        cfg = write_cfg(without(FAST, "T0"))
        proc = subprocess.run([sys.executable, "-m", "lcfshape", "solve", "--config", cfg, "--out", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == EXIT_CONFIG and "missing required key 'T0'" in proc.stderr


class TestSample:
    def test_zero_replications_header_only(self, write_cfg, tmp_path, capsys):
        assert run("sample", write_cfg(FAST), tmp_path, "--replications", "0") == EXIT_OK
        assert (tmp_path / "tau.csv").read_text() == "replication,tau,censored,events\n"

    def test_same_seed_identical(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(FAST)
        for d in ("a", "b"):
            assert run("sample", cfg, tmp_path / d) == EXIT_OK
        assert run("sample", cfg, tmp_path / "c", "--seed", "8") == EXIT_OK
        tau = {d: (tmp_path / d / "tau.csv").read_bytes() for d in "abc"}
        assert tau["a"] == tau["b"] != tau["c"]
        assert (tmp_path / "a" / "events.csv").read_bytes() == (tmp_path / "b" / "events.csv").read_bytes()

    def test_summary(self, write_cfg, tmp_path, capsys):
        assert run("sample", write_cfg(FAST), tmp_path, "--t-max", "5000") == EXIT_OK
        s = json.loads((tmp_path / "sample_summary.json").read_text())
        assert s["t_max"] == 5000.0 and s["replications"] == 200 and 0 <= s["ks_distance"] <= 1
        assert len(read_rows(tmp_path / "tau.csv")) == 201
        assert "KS distance" in capsys.readouterr().out

    def test_negative_replications(self, write_cfg, tmp_path, capsys):
        assert run("sample", write_cfg(FAST), tmp_path, "--replications", "-1") == EXIT_CONFIG


class TestOptimize:
    def test_zero_budget_is_baseline(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(FAST.replace("max_evaluations: 6", "max_evaluations: 0"))
        assert run("optimize", cfg, tmp_path) == EXIT_OK
        trace = json.loads((tmp_path / "trace.json").read_text())
        assert len(trace["entries"]) == 1 and trace["best_J"] == trace["baseline_J"]
        assert trace["best_theta"] == [0.0] * 8
        assert (tmp_path / "incumbent_report.json").exists()

    def test_resume_from_checkpoint(self, write_cfg, tmp_path, capsys):
        cfg = write_cfg(FAST)
        assert run("optimize", cfg, tmp_path) == EXIT_OK
        first = (tmp_path / "trace.json").read_bytes()
        checkpoints = list(tmp_path.glob("checkpoint-*-seed0.jsonl"))
        assert len(checkpoints) == 1
        lines = checkpoints[0].read_text().splitlines()
        checkpoints[0].write_text("\n".join(lines[: len(lines) // 2]) + "\n")
        assert run("optimize", cfg, tmp_path) == EXIT_OK
        assert (tmp_path / "trace.json").read_bytes() == first
        header = read_rows(tmp_path / "trace.csv")[0]
        assert header[3] == "J" and header[13] == "incumbent_J"


class TestDiagnose:
    def test_single_shape_is_baseline(self, write_cfg, tmp_path, capsys):
        assert run("diagnose", write_cfg(FAST), tmp_path, "--n-shapes", "1") == EXIT_OK
        rows = read_rows(tmp_path / "diagnostics.csv")
        assert len(rows) == 2 and rows[1][0] == "0" and float(rows[1][2]) == 0.0
        assert "1/1 pass" in capsys.readouterr().out

    def test_threads_from_environment(self, write_cfg, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(THREADS_ENV, "2")
        assert run("diagnose", write_cfg(FAST), tmp_path / "env") == EXIT_OK
        monkeypatch.delenv(THREADS_ENV)
        assert run("diagnose", write_cfg(FAST), tmp_path / "one") == EXIT_OK
        assert (tmp_path / "env" / "diagnostics.csv").read_bytes() == (tmp_path / "one" / "diagnostics.csv").read_bytes()

    def test_bad_thread_environment(self, write_cfg, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(THREADS_ENV, "many")
        assert run("diagnose", write_cfg(FAST), tmp_path) == EXIT_CONFIG


class TestThreads:
    def test_priority(self, monkeypatch):
        cfg = parse_config(FAST + "numerics:\n  threads: 3\n")
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_threads(None, cfg) == 3
        monkeypatch.setenv(THREADS_ENV, "5")
        assert resolve_threads(None, cfg) == 5
        assert resolve_threads(2, cfg) == 2
        with pytest.raises(ConfigError):
            resolve_threads(0, cfg)


def test_mesh_export(write_cfg, tmp_path, capsys):
    assert run("mesh-export", write_cfg(FAST), tmp_path) == EXIT_OK
    assert (tmp_path / "mesh.txt").exists() and (tmp_path / "mesh.json").exists()
    assert capsys.readouterr().out.startswith("nodes = ")
