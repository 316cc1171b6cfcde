import json

import pytest

from chemolayer.config import (
    DEFAULTS,
    eps_values,
    load_config,
    parse_override,
    problem_spec,
    solver_options,
)
from chemolayer.errors import ConfigError


def test_defaults_untouched_by_load():
    cfg = load_config(None, ["problem.N=3"])
    assert cfg["problem"]["N"] == 3 and DEFAULTS["problem"]["N"] == 2


def test_override_parsing():
    assert parse_override("solver.tol=1e-11") == {"solver": {"tol": 1e-11}}
    assert parse_override("eps_list=[0.1, 5e-2]") == {"eps_list": [0.1, 0.05]}
    assert parse_override("outputs.run_id=abc") == {"outputs": {"run_id": "abc"}}
    with pytest.raises(ConfigError):
        parse_override("solver.tol")


def test_yaml_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("problem:\n  N: 3\n  R: 2\nsolver:\n  tol: 1e-11\neps_list: [0.02, 0.01]\n")
    cfg = load_config(path, ["problem.R=1.5"])
    spec = problem_spec(cfg)
    assert (spec.N, spec.R) == (3, 1.5)
    assert solver_options(cfg).tol == 1e-11
    assert eps_values(cfg) == [0.02, 0.01]


def test_eps_list_wins_over_eps():
    assert eps_values(load_config(None, ["eps=0.1", "eps_list=[0.2, 0.1]"])) == [0.2, 0.1]


def test_tolerances_free_map():
    cfg = load_config(None, ["verify.tolerances={mass_identity: 1e-8, anything: 2}"])
    assert cfg["verify"]["tolerances"] == {"mass_identity": 1e-8, "anything": 2}


@pytest.mark.parametrize("text", [
    "problem.N=0", "problem.R=-1", "problem.geometry=annulus", "mesh.layer_fraction=1.5",
    "solver.max_iters=0", "outputs.run_id=a/b", "levels=[-0.5]", "depths=[-1]",
    "predict.formula=area", "verify.tolerances={x: -1}", "mesh=4",
])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        load_config(None, [text])


def test_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("problem: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_json_artifact_config(tmp_path):
    cfg = load_config(None, ["problem.m=2.5", "eps=0.01"])
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"result": 1, "provenance": {"command": "solve", "config": cfg}}))
    assert load_config(path) == cfg
