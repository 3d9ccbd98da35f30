import csv
import json
import subprocess
import sys

import pytest

from rda_optctl import cli
from rda_optctl.errors import NegativeDensityError
from rda_optctl.report import read_slice

SMALL = """
name: small
h: "sin(6*pi*x)+1.1"
u0: "sin(2*pi*x)+1"
grid: {nx: 21}
outputs: {slices: [0.5]}
"""


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def test_run_writes_artifacts(scenario_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", str(scenario_file), "--out", str(out)]) == 0
    printed = capsys.readouterr().out.split()
    for name in ("u.csv", "m.csv", "p.csv", "heatmap_u.svg", "heatmap_m.svg", "summary.json"):
        assert (out / name).exists()
        assert str(out / name) in printed
    assert (out / "slices" / "u" / "slice_t0.5.csv").exists()
    assert json.loads((out / "summary.json").read_text())["converged"] is True


def test_run_overrides(scenario_file, tmp_path):
    out = tmp_path / "run"
    code = cli.main(["run", str(scenario_file), "--out", str(out), "--nx", "17", "--B", "0.5", "--tol", "1e-3"])
    assert code == 0
    doc = json.loads((out / "summary.json").read_text())
    assert doc["grid"]["nx"] == 17 and doc["parameters"]["B"] == 0.5 and doc["parameters"]["sweep"]["tol"] == 1e-3


def test_run_nonconverged_warns_but_succeeds(scenario_file, tmp_path, capsys):
    assert cli.main(["run", str(scenario_file), "--out", str(tmp_path / "r"), "--max-iters", "2"]) == 0
    assert "warning" in capsys.readouterr().err


def test_presets_lists_all(capsys):
    assert cli.main(["presets"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 16
    assert lines[0].startswith("NEU_H1")


def test_slice_command(scenario_file, tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["run", str(scenario_file), "--out", str(out)])
    capsys.readouterr()
    assert cli.main(["slice", str(out), "--t", "0.25", "--field", "m"]) == 0
    path = out / "slices" / "m" / "slice_t0.25.csv"
    assert capsys.readouterr().out.strip() == str(path)
    x, v = read_slice(path)
    assert len(x) == 21 and v.min() >= 0.0
    assert cli.main(["slice", str(out), "--t", "3"]) == 1
    assert cli.main(["slice", str(tmp_path / "nowhere"), "--t", "0.5"]) == 1


def test_sweep_table(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", str(scenario_file), "--param", "B", "--values", "0.05,0.5", "--out", str(out), "--jobs", "1"]) == 0
    with open(out / "sweep_table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["0.05", "0.5"]
    assert [r["run_dir"] for r in rows] == ["B_0.05", "B_0.5"]
    assert float(rows[0]["mean_m"]) > float(rows[1]["mean_m"])
    assert all(r["converged"] == "true" for r in rows)
    assert (out / "B_0.05" / "summary.json").exists()


def test_sweep_parallel_matches_serial(scenario_file, tmp_path, monkeypatch):
    monkeypatch.setenv("RDA_OPTCTL_JOBS", "2")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["sweep", str(scenario_file), "--param", "M", "--values", "2,5", "--out", str(a)]) == 0
    assert cli.main(["sweep", str(scenario_file), "--param", "M", "--values", "2,5", "--out", str(b), "--jobs", "1"]) == 0
    assert (a / "sweep_table.csv").read_text().replace("a/", "b/") == (b / "sweep_table.csv").read_text()
    assert (a / "M_2" / "u.csv").read_bytes() == (b / "M_2" / "u.csv").read_bytes()


def test_sweep_bad_values(scenario_file, tmp_path, monkeypatch):
    assert cli.main(["sweep", str(scenario_file), "--param", "B", "--values", "a,b", "--out", str(tmp_path)]) == 1
    assert cli.main(["sweep", str(scenario_file), "--param", "B", "--values", ",", "--out", str(tmp_path)]) == 1
    assert cli.main(["sweep", str(scenario_file), "--param", "B", "--values", "-1", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("RDA_OPTCTL_JOBS", "many")
    assert cli.main(["sweep", str(scenario_file), "--param", "B", "--values", "1", "--out", str(tmp_path)]) == 2


def test_verify_analytic(capsys):
    assert cli.main(["verify", "--suite", "analytic"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "4/4 checks passed" in out


def test_verify_failure_exit_code(monkeypatch, capsys):
    from rda_optctl import verify

    monkeypatch.setitem(verify.SUITES, "analytic", lambda: [verify.Check("forced", False, "x")])
    assert cli.main(["verify", "--suite", "analytic"]) == 4
    assert "FAIL  forced" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [[], ["bogus"], ["run", "preset:NEU_H1"], ["sweep", "preset:NEU_H1", "--param", "mu", "--values", "1", "--out", "x"],
     ["verify", "--suite", "nope"], ["run", "preset:NEU_H1", "--out", "x", "--nx", "ten"]],
)
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_scenario_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("h: '1'\nu0: 'x-1'\n")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "u0" in capsys.readouterr().err
    assert cli.main(["run", "preset:NOPE", "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["run", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["run", "preset:NEU_H1", "--out", str(tmp_path / "o"), "--nt", "50"]) == 2


def test_solver_abort_exit_code(monkeypatch, scenario_file, tmp_path, capsys):
    def boom(scenario):
        raise NegativeDensityError("state solve: value -1e-3 below -1e-10 at time level 7", level=7)

    monkeypatch.setattr(cli, "run_fbs", boom)
    assert cli.main(["run", str(scenario_file), "--out", str(tmp_path / "o")]) == 3
    assert "time level 7" in capsys.readouterr().err


def test_unwritable_output(scenario_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", str(scenario_file), "--out", str(blocker / "sub")]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rda_optctl", "presets"], capture_output=True, text=True)
    assert proc.returncode == 0 and "DIR_HNEG10X" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "rda_optctl", "run", "preset:NOPE", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
