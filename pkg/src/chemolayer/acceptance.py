"""Acceptance criteria as executable checks.

Each ``criterion_*`` function runs its own solves and returns a
:class:`~chemolayer.verify.Check`.  The CLI ``report`` command and the
acceptance test module both call :func:`run_all`.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache

import numpy as np

from . import asymptotics as asym
from .problem import ProblemSpec, build_mesh
from .profile import eval_F
from .solution import layer_width
from .solvers import (
    find_lambda_m,
    leading_order_solution,
    screened_exact_interval,
    solve_linear_screened,
    solve_nonlocal_newton,
)
from .verify import (
    Check,
    compare_leading_order,
    crucial_estimate_sup,
    fit_expansion,
    nondegeneracy_check,
    pohozaev_refinement,
)

SWEEP = (0.04, 0.02, 0.01, 0.005)
N_NODES = 8001
BASE = ProblemSpec(N=2, R=1.0, m=1.0, u0=1.0)


def _rel(a, b):
    return abs(a / b - 1.0)


@lru_cache(maxsize=64)
def _solution(spec: ProblemSpec, eps: float, n_nodes: int = N_NODES):
    return solve_nonlocal_newton(spec, eps, build_mesh(spec, eps, n_nodes))


def _sweep(spec=BASE, eps_list=SWEEP):
    return [_solution(spec, e) for e in eps_list]


def criterion_1() -> Check:
    spec = ProblemSpec(N=1, R=1.0, m=1.0, u0=1.0)
    errors = {}
    t0 = time.perf_counter()
    for eps in (0.2, 0.1, 0.05):
        mesh = build_mesh(spec, eps, N_NODES, layer_multiplier=8.0)
        lin = solve_linear_screened(spec, eps, 1.0, 1.0, mesh)
        errors[eps] = float(np.max(np.abs(lin.V - screened_exact_interval(mesh.nodes, eps))))
    runtime = time.perf_counter() - t0
    ok = max(errors.values()) <= 1e-8 and runtime < 1.0
    return Check("1 linear oracle", ok, {"sup_error": errors, "runtime_s": runtime},
                 "sup error <= 1e-8, runtime < 1 s", 1e-8)


def criterion_2() -> Check:
    diffs = {}
    for eps in (0.02, 0.01):
        mesh = build_mesh(BASE, eps, N_NODES)
        _, bis = find_lambda_m(BASE, eps, mesh)
        newt = solve_nonlocal_newton(BASE, eps, mesh)
        diffs[eps] = float(np.max(np.abs(bis.psi - newt.psi)))
    return Check("2 cross-solver agreement", max(diffs.values()) <= 1e-8, diffs, "<= 1e-8", 1e-8)


def criterion_3() -> Check:
    sols = _sweep()
    eps = np.array(SWEEP)
    mu = np.array([s.mu_eps for s in sols])
    dev = mu - BASE.rho0
    order_fit = fit_expansion((eps, dev), model="log-linear")
    coeff_fit = fit_expansion((eps, dev / eps), model="a+b*eps")
    target = asym.mu_expansion(BASE).first_order_coeff
    coeff = coeff_fit.coefficients["a"]
    rich = coeff_fit.richardson[-1]
    order = order_fit.coefficients["b"]
    ok = (0.9 <= order <= 1.1 and _rel(coeff, target) <= 0.05 and _rel(rich, target) <= 0.05
          and order_fit.acceptable and coeff_fit.acceptable)
    return Check("3 mu expansion", ok,
                 {"order": order, "first_order_coeff": coeff, "richardson": rich, "predicted": target,
                  "rel_error": _rel(coeff, target)},
                 "order in [0.9, 1.1]; coefficient within 5%", 0.05)


def criterion_4() -> Check:
    sols = _sweep()
    eps = np.array(SWEEP)
    slope = np.array([s.slope_R for s in sols])
    exp = asym.slope_expansion(BASE)
    limit = math.sqrt(2 * BASE.rho0 * eval_F(BASE.u0))
    lead_err = _rel(eps[-1] * slope[-1], limit)
    const_fit = fit_expansion((eps, slope - exp.leading_coeff / eps), model="a+b*eps")
    const = const_fit.coefficients["a"]
    two_term = fit_expansion((eps, slope), model="a/eps+b")
    ok = lead_err <= 0.02 and _rel(const, exp.constant_term) <= 0.05 and const_fit.acceptable
    return Check("4 boundary slope", ok,
                 {"eps_slope_rel_error": lead_err, "fitted_constant": const,
                  "predicted_constant": exp.constant_term,
                  "two_term_leading": two_term.coefficients["a"], "predicted_leading": exp.leading_coeff},
                 "leading <= 2%; constant within 5%", 0.05)


def criterion_5() -> Check:
    sols = _sweep()
    eps = np.array(SWEEP)
    c = 0.5 * BASE.u0
    pred = asym.width(BASE, c)
    w = np.array([layer_width(s, c) for s in sols])
    lead_err = _rel(w[-1] / eps[-1], pred.leading_coeff)
    second = fit_expansion((eps, (w - pred.leading_coeff * eps) / eps**2), model="a+b*eps")
    rich = second.richardson[-1]
    ok = lead_err <= 0.02 and _rel(rich, pred.second_coeff) <= 0.10
    return Check("5 layer width", ok,
                 {"leading_rel_error": lead_err, "second_richardson": rich,
                  "predicted_second": pred.second_coeff, "second_rel_error": _rel(rich, pred.second_coeff)},
                 "leading <= 2%; second-order within 10%", 0.10)


def criterion_6() -> Check:
    radii = (0.5, 0.75, 1.0, 1.5, 2.0)
    eps, c = 0.01, 0.5
    measured = {}
    ok = True
    for N in (2, 3):
        widths, slopes = [], []
        for R in radii:
            sol = _solution(ProblemSpec(N=N, R=R, m=1.0, u0=1.0), eps)
            widths.append(layer_width(sol, c))
            slopes.append(sol.slope_R)
        inc = bool(np.all(np.diff(widths) > 0))
        dec = bool(np.all(np.diff(slopes) < 0))
        ok &= inc and dec
        measured[N] = {"widths": widths, "slopes": slopes}
    return Check("6 width monotone in R", ok, measured,
                 "width strictly increasing, slope strictly decreasing")


def criterion_7() -> Check:
    sols = _sweep()
    measured = {}
    ok = True
    for d0 in (0.5, 1.0, 2.0):
        pw = asym.pointwise(BASE, d0)
        errs = [abs(s.at(BASE.R - d0 * s.eps) - pw.value(s.eps)) for s in sols]
        dec = bool(np.all(np.diff(errs) < 0))
        small = errs[-1] < 0.5 * SWEEP[-1]
        ok &= dec and small
        measured[d0] = errs
    return Check("7 pointwise profile", ok, measured, "decreasing; < 0.5 eps at eps=0.005")


def criterion_8() -> Check:
    sols = _sweep()
    eps = np.array(SWEEP)
    refinement = {e: pohozaev_refinement(BASE, e, N_NODES // 2 + 1) for e in (0.01, 0.005)}
    ref_ok = all(r["spread"] <= 10 * r["error_estimate"] and r["shrink_factor"] >= 3.5
                 for r in refinement.values())
    K = np.array([s.K_eps for s in sols])
    kfit = fit_expansion((eps, K), model="log-linear", last=None, abscissa="inv_eps")
    k_ok = kfit.coefficients["b"] < 0 and kfit.r2 >= 0.98
    crucial = np.array([crucial_estimate_sup(s) for s in sols])
    growth = float(np.polyfit(np.log(eps), np.log(crucial), 1)[0])
    c_ok = growth >= -0.1
    return Check("8 identity suite", ref_ok and k_ok and c_ok,
                 {"refinement": refinement, "logK_slope": kfit.coefficients["b"], "logK_r2": kfit.r2,
                  "crucial_sup": crucial.tolist(), "crucial_loglog_slope": growth},
                 "spread <= 10x estimate, shrink >= 3.5; log|K| slope < 0, R2 >= 0.98; no growth")


def criterion_9() -> Check:
    eps = 0.005
    sol = _solution(BASE, eps)
    u0 = BASE.u0
    near = sol.at(BASE.R - eps**2)
    mid = sol.at(BASE.R - eps)
    far = sol.at(BASE.R - math.sqrt(eps))
    tags = [asym.classify_regime(d, eps).tag for d in (eps**2, eps, math.sqrt(eps))]
    ok = (near >= u0 - 0.05 and 0.05 < mid < u0 - 0.05 and far <= 0.05
          and tags == ["boundary_limit", "transition", "interior_limit"])
    return Check("9 regimes", ok, {"eps2": near, "eps": mid, "sqrt_eps": far, "tags": tags},
                 ">= u0-0.05; inside (0.05, u0-0.05); <= 0.05")


def criterion_10() -> Check:
    sols = _sweep()
    records = [compare_leading_order(s, leading_order_solution(BASE, s.eps, s.mesh)) for s in sols]
    eps = np.array(SWEEP)
    sup = np.array([r["sup_diff"] for r in records])
    fit = fit_expansion((eps, sup), model="log-linear")
    order = fit.coefficients["b"]
    signed = all(r["one_signed"] for r in records)
    return Check("10 leading-order comparison", order >= 0.9 and signed,
                 {"order": order, "sup_diff": sup.tolist(), "one_signed": signed},
                 "order >= 0.9; u_eps >= U_eps", 0.9)


def criterion_11() -> Check:
    values = {}
    ok = True
    for N in (1, 2, 3):
        for R in (0.5, 1.0, 2.0):
            spec = ProblemSpec(N=N, R=R, m=1.0, u0=1.0)
            for eps in (0.05, 0.01, 0.005):
                mesh = build_mesh(spec, eps, 4001)
                coarse = solve_nonlocal_newton(spec, eps, mesh)
                fine = solve_nonlocal_newton(spec, eps, mesh.refine(), init=None)
                s1 = nondegeneracy_check(coarse).smallest_singular_value
                s2 = nondegeneracy_check(fine).smallest_singular_value
                stable = _rel(s1, s2) <= 0.01
                ok &= s1 >= 1e-6 and s2 >= 1e-6 and stable
                values[f"N={N},R={R:g},eps={eps:g}"] = (s1, s2)
    return Check("11 non-degeneracy", ok, {"min": min(min(v) for v in values.values()),
                                           "cases": values},
                 ">= 1e-6, stable under halving (1%)", 1e-6)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_all(selected=None) -> list[Check]:
    out = []
    for i in (selected or sorted(CRITERIA)):
        out.append(CRITERIA[int(i)]())
    return out

