import json

import numpy as np
import pytest

from chemolayer import cli, io
from chemolayer.config import PROVENANCE_PREFIX, load_config

FAST = ["mesh.n_nodes=801", "eps=0.02"]


def _run(command, tmp_path, *overrides, config=None):
    return cli.run(command, config, [*FAST, f"outputs.destination={json.dumps(str(tmp_path))}", *overrides])


def test_solve_writes_artifacts(tmp_path):
    assert _run("solve", tmp_path) == cli.EXIT_OK
    rec = io.load_solution_record((tmp_path / "run.solution.json").read_text())
    assert rec["psi"][-1] == 1.0
    assert rec["spec"] == {"N": 2, "R": 1.0, "m": 1.0, "u0": 1.0, "geometry": "ball"}
    assert rec["provenance"]["command"] == "solve"
    csv = (tmp_path / "run.profile.csv").read_text().splitlines()
    assert csv[0].startswith(PROVENANCE_PREFIX) and csv[1] == "r,psi"
    assert csv[-1] == "1,1"
    assert len(csv) == 2 + 801


def test_rerun_is_byte_identical(tmp_path):
    assert _run("solve", tmp_path) == 0
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert _run("solve", tmp_path) == 0
    assert first == {p.name: p.read_bytes() for p in tmp_path.iterdir()}


@pytest.mark.parametrize("artifact", ["run.solution.json", "run.profile.csv"])
def test_artifact_reproduces_run(tmp_path, artifact):
    assert _run("solve", tmp_path, "solver.tol=1e-11", "problem.u0=1.5") == 0
    original = (tmp_path / "run.solution.json").read_bytes()
    cfg = load_config(tmp_path / artifact)
    assert cfg["problem"]["u0"] == 1.5 and cfg["solver"]["tol"] == 1e-11
    assert cli.run("solve", str(tmp_path / artifact), []) == 0
    assert (tmp_path / "run.solution.json").read_bytes() == original


def test_solve_both_paths(tmp_path):
    assert _run("solve", tmp_path, "solver.path=both", "outputs.formats=[json]") == 0
    rec = json.loads((tmp_path / "run.solution.json").read_text())
    assert rec["cross_solver_sup"] <= 1e-8
    assert not (tmp_path / "run.profile.csv").exists()


def test_run_id_and_out_flags(tmp_path):
    code = cli.main(["solve", "--out", str(tmp_path), "--run-id", "alpha", "--set", "eps=0.05",
                     "--set", "mesh.n_nodes=401"])
    assert code == 0 and (tmp_path / "alpha.solution.json").exists()


@pytest.mark.parametrize("override", [
    "problem.dimension=2", "solver.path=shooting", "eps=-1", "mesh.n_nodes=3.5",
    "eps_list=[0.01, 0.02]", "outputs.formats=[xml]", "problem=3",
])
def test_config_errors_exit_2(tmp_path, override, capsys):
    assert _run("solve", tmp_path, override) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConfigError" and err["error"]["exit_code"] == 2


def test_missing_eps_exit_2(tmp_path):
    assert cli.run("solve", None, [f"outputs.destination={json.dumps(str(tmp_path))}"]) == 2


def test_missing_config_file_exit_2(tmp_path):
    assert cli.run("solve", str(tmp_path / "nope.yaml"), ["eps=0.1"]) == 2


def test_solver_failure_exit_3(tmp_path, capsys):
    code = _run("solve", tmp_path, "solver.max_iters=1", "eps=0.005")
    assert code == cli.EXIT_SOLVER
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConvergenceError"
    assert "residual" in err["error"]["diagnostic"]


def test_sweep(tmp_path):
    assert _run("sweep", tmp_path, "eps_list=[0.04, 0.02]", "levels=[0.5]", "depths=[1.0]") == 0
    lines = (tmp_path / "run.sweep.csv").read_text().splitlines()
    header = lines[1].split(",")
    assert header[:2] == ["eps", "status"]
    assert {"mu_eps", "slope_R", "K_eps", "width_0.5", "psi_d1"} <= set(header)
    assert [line.split(",")[1] for line in lines[2:]] == ["ok", "ok"]


def test_sweep_failure_exit_3(tmp_path):
    assert _run("sweep", tmp_path, "eps_list=[0.02, 0.005]", "solver.max_iters=1") == cli.EXIT_SOLVER
    text = (tmp_path / "run.sweep.csv").read_text()
    assert "failed" in text


def test_predict(tmp_path, capsys):
    assert cli.main(["predict", "--formula", "slope", "--out", str(tmp_path), "--set", "eps=0.01"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["formula_id"] == "slope"
    assert rec["terms"]["leading"] == pytest.approx(100 * np.sqrt(2 / np.pi), rel=1e-14)
    assert rec["terms"]["first_order"] == pytest.approx(-2.0, abs=1e-10)
    saved = json.loads((tmp_path / "run.prediction.json").read_text())
    assert saved["predictions"][0] == rec


def test_predict_width_default_level(tmp_path, capsys):
    assert _run("predict", tmp_path, "predict.formula=width") == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["inputs"]["c"] == 0.5


def test_oracle(tmp_path):
    code = cli.run("oracle", None, ["problem.N=1", "eps_list=[0.2, 0.1]",
                                    f"outputs.destination={json.dumps(str(tmp_path))}"])
    assert code == 0
    rep = json.loads((tmp_path / "run.report.json").read_text())
    assert rep["passed"] and len(rep["checks"]) == 4


def test_oracle_tight_tolerance_fails(tmp_path):
    code = cli.run("oracle", None, ["problem.N=1", "eps=0.1", "mesh.n_nodes=101",
                                    "verify.tolerances={oracle: 1e-15}",
                                    f"outputs.destination={json.dumps(str(tmp_path))}"])
    assert code == cli.EXIT_CHECK


def test_oracle_needs_interval(tmp_path):
    assert _run("oracle", tmp_path) == cli.EXIT_CONFIG


def test_verify_command(tmp_path):
    assert _run("verify", tmp_path, "mesh.n_nodes=2001") == 0
    rep = json.loads((tmp_path / "run.report.json").read_text())
    assert rep["passed"]
    assert rep["residuals"][0]["bound_violations"] == []


def test_report_subset(tmp_path, capsys):
    assert cli.main(["report", "--criteria", "1,9", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("PASS criterion 1") and out[1].startswith("PASS criterion 9")


def test_nan_serialized_as_null():
    assert io.dumps({"x": float("nan"), "y": [1.0, float("inf")]}) == '{\n  "x": null,\n  "y": [1, null]\n}\n'


def test_floats_round_trip():
    vals = np.random.default_rng(1).normal(size=50) * 10.0 ** np.arange(-25, 25)
    back = json.loads(io.dumps(list(vals)))
    assert back == list(vals)
