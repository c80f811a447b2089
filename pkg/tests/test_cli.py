import json
import subprocess
import sys
from pathlib import Path

import pytest

from corforge.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "corforge" / "scenarios"


def read_report(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def test_simulate_writes_artifacts(tmp_path):
    assert main(["simulate", "two-level", "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path / "two_level_report_simulate.json")
    assert rep["exit_status"] == 0
    assert rep["scenario"]["name"] == "two-level"
    assert rep["artifacts"] == ["two_level_simulate.csv"]
    assert set(rep["timings"]) == {"0"}
    header = (tmp_path / "two_level_simulate.csv").read_text().splitlines()[0]
    assert header.startswith("t,sigma_x_re,sigma_x_im,sigma_z_re,sigma_z_im")


def test_verify_scenario_file(tmp_path):
    assert main(["verify", str(SCENARIOS / "two_level.json"), "--out", str(tmp_path), "--jobs", "3"]) == 0
    rep = read_report(tmp_path / "two_level_report_verify.json")
    names = [inv["name"] for inv in rep["invariants"]]
    assert len(names) == len(set(names))
    assert all(inv["passed"] for inv in rep["invariants"])
    assert set(rep["timings"]) == {"0", "1", "2"}


def test_coriolis_symbolic_prints(tmp_path, capsys):
    assert main(["coriolis", "fring-tenney", "--symbolic", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "Sigma(t) = i*ad(alpha)*x + i*ad(beta)*p^3" in out


def test_jones_mateo_spectrum(tmp_path):
    assert main(["spectrum", "jones-mateo", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "jones_mateo_spectrum.csv").read_text().splitlines()
    assert lines[0] == "n,E_re,E_im,E_d96,convergence"
    assert len(lines) == 6


def test_sweep_is_consistent_with_jobs(tmp_path):
    assert main(["sweep", "two-level", "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(["sweep", "two-level", "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    for j in range(3):
        name = f"two_level_sweep_j{j}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "no-such-scenario"],
        ["simulate", "two-level", "--picture", "9"],
        ["simulate", "jones-mateo"],
        ["coriolis", "two-level", "--symbolic"],
    ],
)
def test_usage_errors_exit_1(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_bad_command_exit_1():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "two-level"])
    assert info.value.code == 1


def test_invalid_scenario_exit_1(tmp_path):
    doc = json.loads((SCENARIOS / "two_level.json").read_text())
    doc["dimension"] = 3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", str(path), "--out", str(tmp_path)]) == 1


def test_singular_factor_exit_2(tmp_path):
    doc = json.loads((SCENARIOS / "two_level.json").read_text())
    doc["factors"][0] = {"label": "big", "generator": "pauli_x", "coefficient": "1000*t"}
    path = tmp_path / "singular.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", str(path), "--out", str(tmp_path)]) == 2


def test_failed_invariant_exit_3(tmp_path, monkeypatch):
    import corforge.verify as verify

    monkeypatch.setitem(verify.TOL, "norm_conservation", -1.0)
    assert main(["simulate", "two-level", "--out", str(tmp_path)]) == 3
    assert read_report(tmp_path / "two_level_report_simulate.json")["exit_status"] == 3


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "corforge.cli", "coriolis", "two-level", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "coriolis_recursion" in proc.stdout
