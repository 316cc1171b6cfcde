"""Sweeps over eps, coefficient fits and the identity/property checks."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.sparse import bmat, csc_matrix, diags
from scipy.sparse.linalg import LinearOperator, splu, svds

from . import asymptotics
from .errors import ChemolayerError, DomainError, MeshMismatchError
from .problem import ProblemSpec, ball_integral, build_mesh, radial_operator
from .profile import F_values, sqrtF_integral
from .solution import Solution, layer_width, nodal_derivative
from .solvers import SolverOptions, find_lambda_m, leading_order_solution, solve_nonlocal_newton

log = logging.getLogger(__name__)

MODELS = ("a/eps+b", "a+b*eps", "a*eps", "log-linear")
MAX_REL_DEV = 0.2


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepOptions:
    solver: str = "newton"  # newton | bisection | both
    n_nodes: int = 4001
    layer_multiplier: float | None = None
    layer_fraction: float = 0.5
    levels: tuple = ()
    depths: tuple = ()
    workers: int | None = None
    solver_options: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class SweepResult:
    spec: ProblemSpec
    eps_list: list
    records: list  # one dict per eps, in eps_list order
    quantities: tuple = ()

    def converged(self):
        return [r for r in self.records if r["status"] == "ok"]

    def column(self, key):
        """``(eps, values)`` over converged records holding ``key``."""
        rows = [r for r in self.converged() if key in r]
        return np.array([r["eps"] for r in rows]), np.array([r[key] for r in rows])


def worker_count(requested=None) -> int:
    env = os.environ.get("CHEMOLAYER_WORKERS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise DomainError(f"CHEMOLAYER_WORKERS must be an integer, got {env!r}")
    return max(1, min(requested or cap, cap))


def solve(spec, eps, options: SweepOptions, path=None):
    mesh = build_mesh(spec, eps, options.n_nodes, options.layer_multiplier, options.layer_fraction)
    path = path or options.solver
    if path == "bisection":
        return find_lambda_m(spec, eps, mesh, options.solver_options)[1]
    return solve_nonlocal_newton(spec, eps, mesh, options=options.solver_options)


def _extract(spec, eps, options, quantities):
    rec = {"eps": eps, "status": "ok"}
    path = "newton" if options.solver == "both" else options.solver
    sol = solve(spec, eps, options, path)
    rec.update(solver_path=sol.solver_path, iterations=sol.iterations,
               achieved_residual=sol.achieved_residual)
    if options.solver == "both":
        other = solve(spec, eps, options, "bisection")
        rec["cross_solver_sup"] = float(np.max(np.abs(sol.psi - other.psi)))
    q = set(quantities)
    if "mu" in q:
        rec["mu_eps"] = sol.mu_eps
    if "slope" in q:
        rec["slope_R"] = sol.slope_R
    if "K" in q:
        rec["K_eps"] = sol.K_eps
    if "width" in q:
        for c in options.levels:
            rec[f"width_{c:g}"] = layer_width(sol, c)
    if "pointwise" in q:
        for d0 in options.depths:
            rec[f"psi_d{d0:g}"] = sol.at(spec.R - d0 * eps)
    if "residuals" in q:
        rec["pohozaev_spread"] = pohozaev_residual(sol).K_constancy
        rec["crucial_sup"] = crucial_estimate_sup(sol)
    if "leading" in q:
        lead = leading_order_solution(spec, eps, sol.mesh, options.solver_options)
        cmp = compare_leading_order(sol, lead)
        rec["leading_sup"] = cmp["sup_diff"]
        rec["leading_one_signed"] = cmp["one_signed"]
    return rec


def run_sweep(spec: ProblemSpec, eps_list, quantities=("mu", "slope"),
              options: SweepOptions | None = None) -> SweepResult:
    """Solve at each eps (concurrently) and pull out the requested quantities.

    Failed solves are recorded with ``status='failed'`` and the error text;
    the rest of the sweep is unaffected.
    """
    options = options or SweepOptions()
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")

    def task(eps):
        try:
            return _extract(spec, eps, options, quantities)
        except ChemolayerError as err:
            log.warning("solve failed at eps=%g: %s", eps, err)
            return {"eps": eps, "status": "failed", "error": str(err)}

    workers = worker_count(options.workers)
    if workers == 1 or len(eps_list) == 1:
        records = [task(e) for e in eps_list]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, eps_list))
    return SweepResult(spec, eps_list, records, tuple(quantities))


# ---------------------------------------------------------------- fits

@dataclass
class FitResult:
    model: str
    coefficients: dict
    residuals: np.ndarray
    r2: float
    max_rel_dev: float
    eps: np.ndarray
    values: np.ndarray
    richardson: list = field(default_factory=list)  # leading coefficient per consecutive pair

    @property
    def acceptable(self) -> bool:
        return self.max_rel_dev <= MAX_REL_DEV


def _basis(model, eps, x):
    if model == "a/eps+b":
        return np.column_stack([1.0 / eps, np.ones_like(eps)])
    if model == "a+b*eps":
        return np.column_stack([np.ones_like(eps), eps])
    if model == "a*eps":
        return eps[:, None]
    return np.column_stack([np.ones_like(eps), x])


def _richardson(model, eps, y):
    out = []
    for (e1, y1), (e2, y2) in zip(zip(eps, y), zip(eps[1:], y[1:])):
        if model == "a/eps+b":
            out.append((y1 - y2) / (1.0 / e1 - 1.0 / e2))
        elif model == "a+b*eps":
            out.append((e2 * y1 - e1 * y2) / (e2 - e1))
    return out


def fit_expansion(data, quantity: str | None = None, model: str = "a+b*eps",
                  last: int | None = 3, abscissa: str = "log_eps") -> FitResult:
    """Least-squares fit of a sweep column (or an ``(eps, values)`` pair).

    ``last`` keeps the points with the smallest eps.  The log-linear model
    regresses ``log|y|`` on ``log eps`` (``abscissa='log_eps'``, slope = order)
    or on ``1/eps`` (``abscissa='inv_eps'``).
    """
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}; choose from {MODELS}")
    if isinstance(data, SweepResult):
        eps, y = data.column(quantity)
    else:
        eps, y = (np.asarray(a, dtype=float) for a in data)
    order = np.argsort(-eps)
    eps, y = eps[order], y[order]
    if last is not None:
        eps, y = eps[-last:], y[-last:]
    if eps.size < 3:
        raise DomainError(f"fit needs at least 3 points, got {eps.size}")
    if model == "log-linear":
        x = np.log(eps) if abscissa == "log_eps" else 1.0 / eps
        target = np.log(np.abs(y))
    else:
        x = None
        target = y
    A = _basis(model, eps, x)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    resid = target - A @ coef
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    scale = np.maximum(np.abs(target), np.finfo(float).tiny)
    names = ("a",) if model == "a*eps" else ("a", "b")
    return FitResult(model, dict(zip(names, map(float, coef))), resid, r2,
                     float(np.max(np.abs(resid) / scale)), eps, y, _richardson(model, eps, y))


# ---------------------------------------------------------------- identities

@dataclass
class ResidualReport:
    pohozaev_max: float
    K_constancy: float
    K_profile: np.ndarray
    radii: np.ndarray
    P_II: float
    P_II_limit: float
    mu_identity: float
    crucial_sup: float = math.nan
    bound_violations: list = field(default_factory=list)


def pohozaev_weight(r, N, R):
    r = np.asarray(r, dtype=float)
    return (N - 1) / r - (N - 2) / (2.0 * R**N) * r ** (N - 1)


def K_profile(sol: Solution):
    """``K(r)`` of the first integral at every node with ``r >= R/2``.

    The integral term is accumulated by the trapezoid rule from the first
    such node.
    """
    spec, eps = sol.spec, sol.eps
    N = spec.N
    nodes = sol.nodes
    dpsi = nodal_derivative(nodes, sol.psi)
    j = int(np.searchsorted(nodes, 0.5 * spec.R))
    r = nodes[j:]
    d = dpsi[j:]
    integrand = (N - 1) / r * d**2
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(r))])
    K = 0.5 * eps**2 * d**2 + eps**2 * acc - sol.mu_eps * F_values(np.maximum(sol.psi[j:], 0.0))
    return r, K


def pohozaev_residual(sol: Solution) -> ResidualReport:
    spec, eps = sol.spec, sol.eps
    r, K = K_profile(sol)
    spread = float(np.max(np.abs(K - K[0])))
    dpsi = nodal_derivative(sol.nodes, sol.psi)
    j = r.size
    g = pohozaev_weight(r, spec.N, spec.R)
    P_II = eps * float(trapezoid(g * dpsi[-j:] ** 2, r))
    if spec.u0 > 0:
        limit = spec.N / (2 * spec.R) * math.sqrt(2 * spec.rho0) * sqrtF_integral(spec.u0)
        lead = -spec.N / spec.R * math.sqrt(2 * spec.rho0 * F_values(spec.u0))
    else:
        limit = lead = 0.0
    mu_identity = (sol.mu_eps - spec.rho0) / eps - lead - P_II
    return ResidualReport(float(np.max(np.abs(K))), spread, K, r, P_II, limit, mu_identity)


def screened_first_integral(r, V, dV, eps: float, d: float, N: int = 1) -> np.ndarray:
    """First integral of the screened equation, constant in ``r`` for an exact solution.

    ``eps^2 V'^2 / 2 + eps^2 int_{r_0}^r (N-1)/s V'^2 ds - d^2 V^2 / 2`` with the
    integral accumulated by the trapezoid rule from ``r[0]``.
    """
    r, V, dV = (np.asarray(a, dtype=float) for a in (r, V, dV))
    out = 0.5 * eps**2 * dV**2 - 0.5 * d * d * V**2
    if N > 1:
        g = (N - 1) / r * dV**2
        out += eps**2 * np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(r))])
    return out


def pohozaev_refinement(spec: ProblemSpec, eps: float, n_nodes: int = 4001,
                        options: SolverOptions | None = None) -> dict:
    """Constancy spread on a mesh and its bisected refinement.

    The discretization error is estimated from the difference of ``K(r)``
    at the shared nodes (Richardson factor 4/3 for a second-order scheme).
    """
    coarse_mesh = build_mesh(spec, eps, n_nodes)
    fine_mesh = coarse_mesh.refine()
    coarse = solve_nonlocal_newton(spec, eps, coarse_mesh, options=options)
    fine = solve_nonlocal_newton(spec, eps, fine_mesh, options=options)
    rc, Kc = K_profile(coarse)
    rf, Kf = K_profile(fine)
    shared = np.isin(rf, rc)
    diff = float(np.max(np.abs(Kf[shared] - Kc[np.isin(rc, rf)])))
    spread_c = float(np.max(np.abs(Kc - Kc[0])))
    spread_f = float(np.max(np.abs(Kf - Kf[0])))
    return {
        "spread": spread_c,
        "spread_refined": spread_f,
        "error_estimate": 4.0 / 3.0 * diff,
        "shrink_factor": spread_c / spread_f if spread_f > 0 else math.inf,
    }


def crucial_estimate_sup(sol: Solution, r_max: float | None = None, part: str = "diff") -> float:
    """``sup_r |sqrt(eps) psi' - sqrt(2 rho0 F(psi) / eps)|`` over nodes ``r <= r_max``.

    ``part='slope'`` or ``'potential'`` returns the sup of a single term.
    """
    spec, eps = sol.spec, sol.eps
    nodes = sol.nodes
    keep = nodes <= (spec.R if r_max is None else r_max) + 1e-15
    dpsi = nodal_derivative(nodes, sol.psi)[keep]
    a = math.sqrt(eps) * dpsi
    b = np.sqrt(2 * spec.rho0 * F_values(np.maximum(sol.psi[keep], 0.0)) / eps)
    vals = {"diff": a - b, "slope": a, "potential": b}[part]
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def decay_rate(sol: Solution, lo: float = 1e-8, hi: float = 1e-3) -> float:
    """Fitted rate ``k`` in ``psi ~ exp(-k (R - r)/eps)`` over the outer layer."""
    psi = sol.psi
    u0 = sol.spec.u0
    sel = (psi > lo * u0) & (psi < hi * u0)
    if np.count_nonzero(sel) < 3:
        return math.nan
    x = (sol.spec.R - sol.nodes[sel]) / sol.eps
    slope = np.polyfit(x, np.log(psi[sel]), 1)[0]
    return float(-slope)


def check_qualitative(sol: Solution, smallness: float | None = None) -> list:
    """Bound and shape violations as human-readable strings (empty on success).

    With ``smallness`` set, also require ``psi <= smallness`` on ``[0, R - sqrt(eps)]``.
    """
    spec, eps, psi = sol.spec, sol.eps, sol.psi
    out = []
    if spec.u0 == 0:
        return out if np.all(psi == 0) else ["nonzero profile for zero boundary data"]
    interior = psi[:-1]
    if not (np.all(interior > 0) and np.all(interior < spec.u0)):
        out.append("maximum principle: interior values leave (0, u0)")
    if psi[-1] != spec.u0:
        out.append("boundary value differs from u0")
    if np.any(np.diff(psi) < 0):
        out.append("profile not monotone in r")
    flux = sol.nodes[1:] ** (spec.N - 1) * np.diff(psi) / np.diff(sol.nodes)
    if np.any(np.diff(flux) <= 0):
        out.append("discrete flux r^(N-1) psi' not increasing")
    lo_mu = spec.m / (math.exp(spec.u0) * spec.omega_N)
    if not lo_mu <= sol.mu_eps <= spec.rho0:
        out.append(f"mu_eps={sol.mu_eps!r} outside [{lo_mu!r}, {spec.rho0!r}]")
    if not decay_rate(sol) > 0:
        out.append("no exponential decay into the interior")
    inner = sol.nodes <= spec.R - math.sqrt(eps)
    if smallness is not None and np.any(inner) and psi[inner].max() > smallness:
        out.append(f"interior not small: max psi on [0, R - sqrt(eps)] = {psi[inner].max():.3g}")
    return out


# ---------------------------------------------------------------- non-degeneracy

@dataclass
class NondegeneracyReport:
    smallest_singular_value: float
    mesh_size: int
    normalization: str
    raw_value: float = math.nan


def bordered_linearization(sol: Solution, normalize: bool = True, zero_potential: bool = False):
    """Sparse bordered matrix of the reduced linearization with its closure row.

    Unknowns are the interior nodal values of the perturbation and the
    scalar ``E``.  Rows are weighted by the dual-cell volumes and then
    scaled symmetrically by ``V^{-1/2}`` (``(sum V)^{-1/2}`` for the border),
    so the interior block is the operator itself in the discrete ``L^2``
    inner product.  ``normalize`` further divides by ``rho0``.
    """
    spec, eps = sol.spec, sol.eps
    n = sol.mesh.size - 1
    op = radial_operator(sol.mesh, spec.N).scaled(eps**2)
    V = op.volumes[:n]
    u = sol.psi[:n]
    v = sol.mu_eps * np.exp(u)
    lower, diag, upper = op.lower.copy(), op.diag.copy(), op.upper.copy()
    if not zero_potential:
        diag = diag - v * (1.0 + u)
    core = diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")
    s = np.sqrt(V)
    core = diags(s) @ core @ diags(1.0 / s)
    if zero_potential:
        mat = csc_matrix(core)
    else:
        vol = float(np.sum(op.volumes))
        w = math.sqrt(vol)
        col = (-(u * v) * s / w)[:, None]
        row = (V * v / s / w)[None, :]
        corner = np.array([[float(np.sum(V * v)) / vol]])
        mat = bmat([[core, csc_matrix(col)], [csc_matrix(row), csc_matrix(corner)]], format="csc")
    if normalize:
        mat = mat / spec.rho0
    return mat


def smallest_singular_value(mat) -> float:
    n = mat.shape[0]
    if n <= 400:
        return float(np.linalg.svd(mat.toarray(), compute_uv=False)[-1])
    lu = splu(csc_matrix(mat))
    lu_t = splu(csc_matrix(mat.T))
    inv = LinearOperator((n, n), matvec=lu.solve, rmatvec=lu_t.solve, dtype=float)
    s = svds(inv, k=1, return_singular_vectors=False, tol=1e-10,
             v0=np.ones(n) / math.sqrt(n))
    return float(1.0 / s[0])


def nondegeneracy_check(sol: Solution, normalize: bool = True,
                        zero_potential: bool = False) -> NondegeneracyReport:
    if not np.all(np.isfinite(sol.psi)) or not math.isfinite(sol.mu_eps):
        raise DomainError("non-degeneracy check needs a converged solution")
    mat = bordered_linearization(sol, normalize, zero_potential)
    sigma = smallest_singular_value(mat)
    raw = sigma * sol.spec.rho0 if normalize else sigma
    label = "volume-weighted symmetric" + (", divided by rho0" if normalize else "")
    return NondegeneracyReport(sigma, sol.mesh.size, label, raw)


# ---------------------------------------------------------------- leading order

def compare_leading_order(sol: Solution, leading) -> dict:
    """Sup difference between the nonlocal solution and the ``lambda = 1/|B_R|`` profile."""
    mesh = getattr(leading, "mesh", None)
    if mesh is not None and not sol.mesh.same_as(mesh):
        raise MeshMismatchError("profiles live on different meshes")
    other = np.asarray(getattr(leading, "psi", leading), dtype=float)
    if other.shape != sol.psi.shape:
        raise MeshMismatchError("profiles have different lengths")
    diff = sol.psi - other
    violations = int(np.count_nonzero(diff < -1e-12))
    return {"eps": sol.eps, "sup_diff": float(np.max(np.abs(diff))),
            "one_signed": violations == 0, "violations": violations}


# ---------------------------------------------------------------- report

@dataclass
class Check:
    name: str
    passed: bool
    measured: object
    band: object
    tolerance: object = None
    note: str = ""

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def to_record(self):
        return {"name": self.name, "status": self.status, "measured": self.measured,
                "band": self.band, "tolerance": self.tolerance, "note": self.note}


def report_record(checks) -> dict:
    return {"checks": [c.to_record() for c in checks],
            "passed": all(c.passed for c in checks)}


CHECK_TOLERANCES = {
    "mass_identity": 1e-9,
    "K_constancy": 1e-4,
    "nondegeneracy": 1e-6,
    "slope_vs_prediction": 0.05,
}
SOLUTION_CHECKS = ("qualitative_bounds", "mass_identity", "K_constancy", "nondegeneracy",
                   "decay_rate", "slope_vs_prediction")


def check_solution(sol: Solution, enabled=None, tolerances=None) -> list[Check]:
    """Per-solution checks used by the ``verify`` command."""
    tol = {**CHECK_TOLERANCES, **(tolerances or {})}
    enabled = set(SOLUTION_CHECKS if enabled is None else enabled)
    unknown = enabled - set(SOLUTION_CHECKS)
    if unknown:
        raise DomainError(f"unknown checks {sorted(unknown)}; choose from {SOLUTION_CHECKS}")
    spec = sol.spec
    out = []
    if "qualitative_bounds" in enabled:
        viol = check_qualitative(sol)
        out.append(Check("qualitative_bounds", not viol, viol, "no violations"))
    if "mass_identity" in enabled:
        v = sol.mu_eps * np.exp(sol.psi)
        mass = ball_integral(v, sol.mesh, spec.N, spec.alpha_N)
        rel = abs(mass / spec.m - 1)
        out.append(Check("mass_identity", rel <= tol["mass_identity"], rel,
                         f"<= {tol['mass_identity']:g}", tol["mass_identity"]))
    if "K_constancy" in enabled:
        res = pohozaev_residual(sol)
        out.append(Check("K_constancy", res.K_constancy <= tol["K_constancy"], res.K_constancy,
                         f"<= {tol['K_constancy']:g}", tol["K_constancy"]))
    if "nondegeneracy" in enabled:
        nd = nondegeneracy_check(sol)
        out.append(Check("nondegeneracy", nd.smallest_singular_value >= tol["nondegeneracy"],
                         nd.smallest_singular_value, f">= {tol['nondegeneracy']:g}",
                         tol["nondegeneracy"], note=nd.normalization))
    if spec.u0 > 0 and "decay_rate" in enabled:
        rate = decay_rate(sol)
        out.append(Check("decay_rate", math.isfinite(rate) and rate > 0, rate, "> 0",
                         note=f"sqrt(rho0) = {math.sqrt(spec.rho0):.6g}"))
    if spec.u0 > 0 and "slope_vs_prediction" in enabled:
        pred = asymptotics.predict_slope(spec, sol.eps).value
        rel = abs(sol.slope_R / pred - 1)
        out.append(Check("slope_vs_prediction", rel <= tol["slope_vs_prediction"], rel,
                         f"<= {tol['slope_vs_prediction']:g}", tol["slope_vs_prediction"]))
    return out
