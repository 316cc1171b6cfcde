"""Run configuration: YAML file, strict schema, dotted-path overrides."""

from __future__ import annotations

import copy
import math
import re
from pathlib import Path

import yaml

from .errors import ConfigError, DomainError
from .problem import ProblemSpec
from .solvers import SolverOptions

DEFAULTS = {
    "problem": {"N": 2, "R": 1.0, "m": 1.0, "u0": 1.0, "geometry": "ball"},
    "eps": None,
    "eps_list": None,
    "mesh": {"n_nodes": 4001, "layer_multiplier": None, "layer_fraction": 0.5},
    "solver": {"path": "newton", "tol": 1e-10, "max_iters": 60},
    "outputs": {"formats": ["json", "csv"], "destination": ".", "run_id": "run"},
    "verify": {"checks": None, "criteria": None, "tolerances": {}},
    "levels": [],
    "depths": [],
    "oracle": {"d": 1.0, "boundary_value": 1.0},
    "predict": {"formula": "slope", "d0": 1.0, "c": None},
}

SOLVER_PATHS = ("newton", "bisection", "both")
FORMATS = ("json", "csv")
FORMULAS = ("mu", "slope", "pointwise", "interior_slope", "width")
_FREE_MAPS = {("verify", "tolerances")}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-11`` (no dot) as a float, as YAML 1.2 does."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$|^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$"),
    list("-+0123456789."),
)


def _load_yaml(text):
    return yaml.load(text, Loader=_Loader)


def _merge(base, update, path=()):
    for key, value in update.items():
        if key not in base:
            where = ".".join(path + (str(key),))
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and path + (key,) not in _FREE_MAPS:
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(path + (key,))} must be a mapping")
            _merge(base[key], value, path + (key,))
        else:
            base[key] = value
    return base


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key.path=value")
    key, raw = text.split("=", 1)
    try:
        value = _load_yaml(raw)
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse override value {raw!r}: {err}")
    out = value
    for part in reversed(key.strip().split(".")):
        out = {part: out}
    return out


PROVENANCE_PREFIX = "# provenance: "


def read_config_file(path) -> dict:
    """Config mapping from a YAML file or from the provenance block of an artifact."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}")
    csv_artifact = text.startswith(PROVENANCE_PREFIX)
    if csv_artifact:
        text = text.splitlines()[0][len(PROVENANCE_PREFIX):]
    try:
        data = _load_yaml(text) or {}
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML in {path}: {err}")
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    prov = data if csv_artifact else data.get("provenance")
    if isinstance(prov, dict) and "config" in prov:
        data = prov["config"]
    return data


def load_config(path=None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        data = read_config_file(path)
        _merge(cfg, data)
    for text in overrides:
        _merge(cfg, parse_override(text))
    validate(cfg)
    return cfg


def _positive(name, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be > 0, got {value!r}")


def validate(cfg: dict) -> None:
    try:
        problem_spec(cfg)
    except (DomainError, TypeError) as err:
        raise ConfigError(f"problem: {err}")
    if cfg["eps"] is not None:
        _positive("eps", cfg["eps"])
    if cfg["eps_list"] is not None:
        if not isinstance(cfg["eps_list"], list) or not cfg["eps_list"]:
            raise ConfigError("eps_list must be a non-empty list")
        for e in cfg["eps_list"]:
            _positive("eps_list entry", e)
        if any(b >= a for a, b in zip(cfg["eps_list"], cfg["eps_list"][1:])):
            raise ConfigError("eps_list must be strictly decreasing")
    mesh = cfg["mesh"]
    _positive("mesh.n_nodes", mesh["n_nodes"], integer=True)
    if mesh["n_nodes"] < 9:
        raise ConfigError("mesh.n_nodes must be >= 9")
    if mesh["layer_multiplier"] is not None:
        _positive("mesh.layer_multiplier", mesh["layer_multiplier"])
    _positive("mesh.layer_fraction", mesh["layer_fraction"])
    if mesh["layer_fraction"] >= 1:
        raise ConfigError("mesh.layer_fraction must be < 1")
    solver = cfg["solver"]
    if solver["path"] not in SOLVER_PATHS:
        raise ConfigError(f"solver.path must be one of {SOLVER_PATHS}")
    _positive("solver.tol", solver["tol"])
    _positive("solver.max_iters", solver["max_iters"], integer=True)
    out = cfg["outputs"]
    formats = out["formats"]
    if isinstance(formats, str):
        out["formats"] = formats = [formats]
    if not set(formats) <= set(FORMATS):
        raise ConfigError(f"outputs.formats must be a subset of {FORMATS}")
    if not isinstance(out["run_id"], str) or not out["run_id"] or "/" in out["run_id"]:
        raise ConfigError("outputs.run_id must be a non-empty name without '/'")
    for name, tol in (cfg["verify"]["tolerances"] or {}).items():
        _positive(f"verify.tolerances.{name}", tol)
    for c in cfg["levels"]:
        _positive("levels entry", c)
    for d in cfg["depths"]:
        if isinstance(d, bool) or not isinstance(d, (int, float)) or d < 0:
            raise ConfigError(f"depths entries must be >= 0, got {d!r}")
    _positive("oracle.d", cfg["oracle"]["d"])
    if cfg["predict"]["formula"] not in FORMULAS:
        raise ConfigError(f"predict.formula must be one of {FORMULAS}")


def problem_spec(cfg) -> ProblemSpec:
    p = cfg["problem"]
    N = p["N"]
    if isinstance(N, float) and N.is_integer():
        N = int(N)
    return ProblemSpec(N=N, R=float(p["R"]), m=float(p["m"]), u0=float(p["u0"]), geometry=p["geometry"])


def solver_options(cfg) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(tol=float(s["tol"]), max_iters=int(s["max_iters"]))


def eps_values(cfg) -> list:
    if cfg["eps_list"] is not None:
        return [float(e) for e in cfg["eps_list"]]
    if cfg["eps"] is not None:
        return [float(cfg["eps"])]
    raise ConfigError("set eps or eps_list")
