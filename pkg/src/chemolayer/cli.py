"""Command-line driver: ``chemolayer {solve,sweep,predict,oracle,verify,report}``.

Exit status: 0 success, 1 a check failed, 2 configuration error,
3 solver failure.  Errors are also written to stderr as a JSON record.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, asymptotics, io, verify
from .config import PROVENANCE_PREFIX, eps_values, load_config, problem_spec, solver_options
from .errors import ChemolayerError, ConfigError
from .problem import build_mesh
from .solution import fornberg_weights
from .solvers import find_lambda_m, screened_exact_interval, solve_linear_screened, solve_nonlocal_newton

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("solve", "sweep", "predict", "oracle", "verify", "report")

log = logging.getLogger("chemolayer")


class Run:
    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        out = cfg["outputs"]
        self.dest = Path(out["destination"])
        self.run_id = out["run_id"]
        self.formats = set(out["formats"])
        self.written = []

    def path(self, suffix):
        return self.dest / f"{self.run_id}.{suffix}"

    def json(self, suffix, payload):
        payload = {**payload, "provenance": io.provenance(self.command, self.cfg)}
        self.written.append(io.write_text(self.path(suffix), io.dumps(payload)))

    def csv(self, suffix, text):
        head = PROVENANCE_PREFIX + json.dumps(io.provenance(self.command, self.cfg), sort_keys=False) + "\n"
        self.written.append(io.write_text(self.path(suffix), head + text))


def _mesh(cfg, spec, eps, **kw):
    m = cfg["mesh"]
    return build_mesh(spec, eps, int(m["n_nodes"]), kw.get("layer_multiplier", m["layer_multiplier"]),
                      m["layer_fraction"])


def _solve(cfg, spec, eps, path=None):
    path = path or cfg["solver"]["path"]
    mesh = _mesh(cfg, spec, eps)
    opts = solver_options(cfg)
    if path == "bisection":
        return find_lambda_m(spec, eps, mesh, opts)[1]
    return solve_nonlocal_newton(spec, eps, mesh, options=opts)


def cmd_solve(run: Run) -> int:
    cfg = run.cfg
    spec = problem_spec(cfg)
    eps = eps_values(cfg)[0]
    path = cfg["solver"]["path"]
    sol = _solve(cfg, spec, eps, "newton" if path == "both" else path)
    record = io.solution_record(sol)
    if path == "both":
        other = _solve(cfg, spec, eps, "bisection")
        record["cross_solver_sup"] = float(np.max(np.abs(sol.psi - other.psi)))
    if "json" in run.formats:
        run.json("solution.json", record)
    if "csv" in run.formats:
        run.csv("profile.csv", io.profile_csv(sol))
    return EXIT_OK


def cmd_sweep(run: Run) -> int:
    cfg = run.cfg
    spec = problem_spec(cfg)
    quantities = ["mu", "slope", "K"]
    if cfg["levels"]:
        quantities.append("width")
    if cfg["depths"]:
        quantities.append("pointwise")
    opts = verify.SweepOptions(
        solver=cfg["solver"]["path"], n_nodes=int(cfg["mesh"]["n_nodes"]),
        layer_multiplier=cfg["mesh"]["layer_multiplier"], layer_fraction=cfg["mesh"]["layer_fraction"],
        levels=tuple(cfg["levels"]), depths=tuple(cfg["depths"]), solver_options=solver_options(cfg))
    sweep = verify.run_sweep(spec, eps_values(cfg), quantities, opts)
    run.csv("sweep.csv", io.sweep_csv(sweep))
    failed = [r for r in sweep.records if r["status"] != "ok"]
    if failed:
        _error_record(ChemolayerError(f"{len(failed)} of {len(sweep.records)} solves failed"), EXIT_SOLVER,
                      failures=[{"eps": r["eps"], "error": r["error"]} for r in failed])
        return EXIT_SOLVER
    return EXIT_OK


def cmd_predict(run: Run) -> int:
    cfg = run.cfg
    spec = problem_spec(cfg)
    p = cfg["predict"]
    records = []
    for eps in eps_values(cfg):
        kw = {}
        if p["formula"] in ("pointwise", "interior_slope"):
            kw["d0"] = float(p["d0"])
        if p["formula"] == "width":
            kw["c"] = float(p["c"] if p["c"] is not None else 0.5 * spec.u0)
        records.append(asymptotics.predict(spec, p["formula"], eps, **kw).to_record())
    payload = {"predictions": records}
    run.json("prediction.json", payload)
    sys.stdout.write(io.dumps(records[0] if len(records) == 1 else records))
    return EXIT_OK


def cmd_oracle(run: Run) -> int:
    cfg = run.cfg
    spec = problem_spec(cfg)
    if spec.N != 1:
        raise ConfigError("the closed-form oracle is the interval case; set problem.N = 1")
    d = float(cfg["oracle"]["d"])
    b = float(cfg["oracle"]["boundary_value"])
    tol = float(cfg["verify"]["tolerances"].get("oracle", 1e-8))
    slope_tol = float(cfg["verify"]["tolerances"].get("oracle_slope", 1e-6))
    checks = []
    for eps in eps_values(cfg):
        mesh = _mesh(cfg, spec, eps, layer_multiplier=cfg["mesh"]["layer_multiplier"] or 8.0 / d)
        lin = solve_linear_screened(spec, eps, d, b, mesh)
        exact = screened_exact_interval(mesh.nodes, eps, d, spec.R, b)
        err = float(np.max(np.abs(lin.V - exact)))
        checks.append(verify.Check(f"oracle_sup_error eps={eps:g}", err <= tol, err, f"<= {tol:g}", tol))
        slope = float(fornberg_weights(mesh.nodes[-1], mesh.nodes[-4:], 1)[1] @ lin.V[-4:])
        k = d / eps
        exact_slope = b * k * math.tanh(k * spec.R)
        rel = abs(slope / exact_slope - 1)
        checks.append(verify.Check(f"oracle_slope eps={eps:g}", rel <= slope_tol, rel,
                                   f"<= {slope_tol:g}", slope_tol))
    run.json("report.json", verify.report_record(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def cmd_verify(run: Run) -> int:
    cfg = run.cfg
    spec = problem_spec(cfg)
    vcfg = cfg["verify"]
    checks, residuals = [], []
    for eps in eps_values(cfg):
        sol = _solve(cfg, spec, eps, "newton" if cfg["solver"]["path"] == "both" else None)
        for c in verify.check_solution(sol, vcfg["checks"], vcfg["tolerances"]):
            c.name = f"{c.name} eps={eps:g}"
            checks.append(c)
        res = verify.pohozaev_residual(sol)
        residuals.append({
            "eps": eps, "pohozaev_max": res.pohozaev_max, "K_constancy": res.K_constancy,
            "P_II": res.P_II, "P_II_limit": res.P_II_limit, "mu_identity": res.mu_identity,
            "crucial_sup": verify.crucial_estimate_sup(sol),
            "bound_violations": verify.check_qualitative(sol),
        })
    payload = verify.report_record(checks)
    payload["residuals"] = residuals
    run.json("report.json", payload)
    return EXIT_OK if payload["passed"] else EXIT_CHECK


def cmd_report(run: Run) -> int:
    selected = run.cfg["verify"]["criteria"]
    checks = acceptance.run_all(selected)
    for c in checks:
        print(f"{c.status} criterion {c.name}")
    run.json("report.json", verify.report_record(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


HANDLERS = {"solve": cmd_solve, "sweep": cmd_sweep, "predict": cmd_predict,
            "oracle": cmd_oracle, "verify": cmd_verify, "report": cmd_report}


def _error_record(err, code, **extra):
    rec = {"error": {"type": type(err).__name__, "message": str(err), "exit_code": code}}
    diag = getattr(err, "diagnostic", None)
    if diag:
        rec["error"]["diagnostic"] = diag
    rec["error"].update(extra)
    sys.stderr.write(io.dumps(rec))


def build_parser():
    parser = argparse.ArgumentParser(prog="chemolayer", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("-c", "--config", help="YAML run configuration")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-path override, e.g. solver.tol=1e-11 (repeatable)")
    parser.add_argument("--out", help="output directory (outputs.destination)")
    parser.add_argument("--run-id", help="artifact name prefix (outputs.run_id)")
    parser.add_argument("--formula", help="predict: formula name (predict.formula)")
    parser.add_argument("--criteria", help="report: comma-separated criterion numbers")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(command, config_path=None, overrides=()) -> int:
    try:
        cfg = load_config(config_path, overrides)
        if command in ("solve", "sweep", "predict", "oracle", "verify"):
            eps_values(cfg)
    except ConfigError as err:
        _error_record(err, EXIT_CONFIG)
        return EXIT_CONFIG
    runner = Run(command, cfg)
    try:
        code = HANDLERS[command](runner)
    except ConfigError as err:
        _error_record(err, EXIT_CONFIG)
        return EXIT_CONFIG
    except ChemolayerError as err:
        _error_record(err, EXIT_SOLVER)
        return EXIT_SOLVER
    for path in runner.written:
        log.info("wrote %s", path)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"outputs.destination={json.dumps(args.out)}")
    if args.run_id:
        overrides.append(f"outputs.run_id={json.dumps(args.run_id)}")
    if args.formula:
        overrides.append(f"predict.formula={args.formula}")
    if args.criteria:
        overrides.append(f"verify.criteria=[{args.criteria}]")
    return run(args.command, args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
