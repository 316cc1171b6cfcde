"""Discrete solvers for the radial nonlocal problem

    eps^2 (psi'' + (N-1)/r psi') = mu f(psi),  mu = m / int_{B_R} e^psi,
    psi'(0) = 0,  psi(R) = u0.

Two independent routes reach the same discrete solution: the constructive
route (monotone iteration for the local problem at fixed ``lambda``, then
bisection on ``lambda`` until ``lambda int e^psi = 1``) and a bordered
Newton method on ``(psi, mu)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BracketError, ConvergenceError, DomainError
from .problem import Mesh, ProblemSpec, ball_integral, build_mesh, radial_operator
from .profile import F_values, TAIL_FRACTION, f_values, fprime_values, psi_inverse
from .solution import Solution, finalize

log = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iters: int = 60
    monotone_tol: float = 1e-12
    monotone_max_iters: int = 10_000
    constraint_tol: float = 1e-10
    bracket_growth: float = 4.0
    max_bracket_steps: int = 30
    max_bisection_steps: int = 200
    step_tol: float = 1e-12
    min_damping: float = 1.0 / 1024
    max_continuation: int = 6


@dataclass
class LocalSolution:
    lam: float
    psi: np.ndarray
    sweeps: int
    last_diff: float
    mesh: Mesh | None = None


@dataclass
class BisectionTrace:
    lambda_lo: float
    lambda_hi: float
    lambda_m: float = math.nan
    history: list = field(default_factory=list)  # (lambda, residual) pairs in evaluation order

    @property
    def residuals(self):
        return [g for _, g in self.history]


def _check_eps(eps):
    if not (math.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be finite and > 0, got {eps!r}")


def _zero_solution(spec, eps, mesh, path):
    psi = np.zeros(mesh.size)
    return finalize(Solution(spec, eps, mesh, psi, spec.rho0, path, 0, 0.0))


def solve_local_lambda(spec: ProblemSpec, eps: float, lam: float, mesh: Mesh,
                       options: SolverOptions | None = None, init=None,
                       polish: bool = False) -> LocalSolution:
    """Solve ``eps^2 Delta psi = lam m f(psi)``, ``psi(R) = u0`` by monotone iteration.

    Starts from the super-solution ``psi = u0`` unless ``init`` (itself a
    super-solution, e.g. the solution for a smaller ``lam``) is given.
    The sweep test is absolute, so values far below ``monotone_tol`` are not
    resolved; ``polish`` adds Newton steps until the step is small relative
    to every nodal value.
    """
    options = options or SolverOptions()
    _check_eps(eps)
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be finite and > 0, got {lam!r}")
    n = mesh.size - 1
    u0 = spec.u0
    if u0 == 0.0:
        return LocalSolution(lam, np.zeros(mesh.size), 0, 0.0, mesh)
    op = radial_operator(mesh, spec.N).scaled(eps**2)
    coef = lam * spec.m
    shift = float(fprime_values(u0))  # max of f' on [0, u0]
    start = np.full(n, u0) if init is None else np.asarray(init, dtype=float)[:n]
    psi, sweeps, diff = kernels.monotone_iterate(
        op.lower, op.diag, op.upper, op.boundary * u0, coef, shift, start,
        options.monotone_tol, options.monotone_max_iters)
    if diff > options.monotone_tol:
        raise ConvergenceError(f"monotone iteration stalled after {sweeps} sweeps",
                               last_diff=diff, sweeps=sweeps, lam=lam)
    if polish:
        psi = _polish_local(op, coef, u0, psi)
    return LocalSolution(lam, np.append(psi, u0), sweeps, diff, mesh)


def _polish_local(op, coef, u0, psi, max_steps=20):
    for _ in range(max_steps):
        e = np.exp(psi)
        rows = op.apply(psi, u0) - coef * psi * e
        step = kernels.thomas_solve(op.lower, op.diag - coef * (1.0 + psi) * e, op.upper, -rows)
        psi = psi + step
        if np.all(np.abs(step) <= 1e-14 * np.abs(psi)):
            break
    return psi


def constraint_residual(spec, mesh, local: LocalSolution) -> float:
    return local.lam * ball_integral(np.exp(local.psi), mesh, spec.N, spec.alpha_N) - 1.0


def find_lambda_m(spec: ProblemSpec, eps: float, mesh: Mesh | None = None,
                  options: SolverOptions | None = None):
    """Bisection (Illinois-accelerated) on ``lambda`` for ``lambda int e^{u_lambda} = 1``.

    Returns ``(BisectionTrace, Solution)`` with ``mu_eps = lambda_m m``.
    """
    options = options or SolverOptions()
    _check_eps(eps)
    mesh = mesh or build_mesh(spec, eps)
    vol = spec.omega_N
    if spec.u0 == 0.0:
        trace = BisectionTrace(1 / vol, 1 / vol, 1 / vol, [(1 / vol, 0.0)])
        return trace, _zero_solution(spec, eps, mesh, "bisection")

    evaluated: dict[float, LocalSolution] = {}
    total_sweeps = 0

    def evaluate(lam):
        nonlocal total_sweeps
        below = [k for k in evaluated if k < lam]
        init = evaluated[max(below)].psi if below else None
        local = solve_local_lambda(spec, eps, lam, mesh, options, init=init)
        evaluated[lam] = local
        total_sweeps += local.sweeps
        g = constraint_residual(spec, mesh, local)
        trace.history.append((lam, g))
        return g

    lo = 0.5 / (math.exp(spec.u0) * vol)
    hi = 2.0 / vol
    trace = BisectionTrace(lo, hi)
    g_lo, g_hi = evaluate(lo), evaluate(hi)
    steps = 0
    while not (g_lo < 0 < g_hi):
        steps += 1
        if steps > options.max_bracket_steps:
            raise BracketError(f"no sign change in [{lo}, {hi}] after {steps - 1} expansions")
        if g_lo >= 0:
            lo /= options.bracket_growth
            g_lo = evaluate(lo)
        if g_hi <= 0:
            hi *= options.bracket_growth
            g_hi = evaluate(hi)
    trace.lambda_lo, trace.lambda_hi = lo, hi

    side = 0
    lam, g = (lo, g_lo) if abs(g_lo) < abs(g_hi) else (hi, g_hi)
    for _ in range(options.max_bisection_steps):
        if abs(g) <= options.constraint_tol:
            break
        # Illinois false position, falling back to bisection near the ends
        lam = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        if not lo < lam < hi or min(lam - lo, hi - lam) < 1e-3 * (hi - lo):
            lam = 0.5 * (lo + hi)
        g = evaluate(lam)
        if g < 0:
            lo, g_lo = lam, g
            if side == -1:
                g_hi *= 0.5
            side = -1
        else:
            hi, g_hi = lam, g
            if side == 1:
                g_lo *= 0.5
            side = 1
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    else:
        raise ConvergenceError("lambda bisection did not meet the constraint tolerance",
                               residual=g, lam=lam)
    if abs(g) > options.constraint_tol:
        raise ConvergenceError("lambda bracket collapsed before the constraint was met",
                               residual=g, lam=lam)
    trace.lambda_m = lam
    # resolve the exponentially small interior values at the final lambda
    op = radial_operator(mesh, spec.N).scaled(eps**2)
    n = mesh.size - 1
    local = evaluated[lam]
    local.psi[:n] = _polish_local(op, lam * spec.m, spec.u0, local.psi[:n])
    g = constraint_residual(spec, mesh, local)
    sol = Solution(spec, eps, mesh, local.psi, lam * spec.m, "bisection",
                   total_sweeps, abs(g), meta={"lambda_evaluations": len(trace.history)})
    return trace, finalize(sol)


def inner_profile_guess(spec: ProblemSpec, eps: float, mesh: Mesh, levels: int = 120) -> np.ndarray:
    """Leading-order layer profile ``Psi^R((R - r)/eps)`` at the mesh nodes."""
    u0 = spec.u0
    cs = u0 * np.geomspace(TAIL_FRACTION, 1.0, levels)
    xs = np.array([psi_inverse(spec.m, u0, c) for c in cs])  # decreasing
    depth = (spec.R - mesh.nodes) / (eps * math.sqrt(spec.omega_N))
    guess = np.interp(depth, xs[::-1], cs[::-1])
    tail = depth > xs[0]
    guess[tail] = cs[0] * np.exp(-math.sqrt(spec.m) * (depth[tail] - xs[0]))
    return guess


def nonlocal_residual(spec, eps, mesh, psi, mu, op=None):
    """Residual rows of the coupled discrete system: (equation rows, constraint)."""
    op = op or radial_operator(mesh, spec.N).scaled(eps**2)
    n = mesh.size - 1
    rows = op.apply(psi[:n], psi[n]) - mu * f_values(psi[:n])
    constraint = mu * ball_integral(np.exp(psi), mesh, spec.N, spec.alpha_N) / spec.m - 1.0
    return rows, constraint


def _newton(spec, eps, mesh, psi, mu, options):
    op = radial_operator(mesh, spec.N).scaled(eps**2)
    n = mesh.size - 1
    w = spec.sphere_area * op.volumes  # ball quadrature weights
    psi = np.array(psi, dtype=float)
    psi[n] = spec.u0

    # rows are measured relative to the size of their terms at psi = u0
    scale = np.abs(op.diag[:n]) * spec.u0 + spec.rho0 * float(f_values(spec.u0))

    def merit(p, m_):
        rows, c = nonlocal_residual(spec, eps, mesh, p, m_, op)
        return max(float(np.max(np.abs(rows) / scale)), abs(c)), rows, c

    res, rows, c = merit(psi, mu)
    for it in range(1, options.max_iters + 1):
        p = psi[:n]
        e = np.exp(p)
        diag = op.diag - mu * (1.0 + p) * e
        # bordered elimination around the tridiagonal block
        y = kernels.thomas_solve(op.lower, diag, op.upper, -rows)
        z = kernels.thomas_solve(op.lower, diag, op.upper, p * e)  # T^{-1} (-d rows/d mu)
        row_mu = mu * w[:n] * e / spec.m
        d_mu = float(np.dot(w, np.exp(psi))) / spec.m
        dmu = (-c - row_mu @ y) / (d_mu - row_mu @ z)
        dpsi = y - dmu * z
        step = 1.0
        while True:
            trial = psi.copy()
            trial[:n] += step * dpsi
            trial_mu = mu + step * dmu
            new_res, new_rows, new_c = merit(trial, trial_mu)
            if math.isfinite(new_res) and trial_mu > 0 and (new_res < (1 - 1e-4 * step) * res or new_res <= options.tol):
                break
            step *= 0.5
            if step < options.min_damping:
                if res <= options.tol:  # already at the rounding floor
                    return psi, mu, it, res
                raise ConvergenceError("Newton damping exhausted", iteration=it,
                                       last_step=float(np.max(np.abs(dpsi))), residual=res)
        psi, mu, res, rows, c = trial, trial_mu, new_res, new_rows, new_c
        step_norm = step * max(float(np.max(np.abs(dpsi))), abs(dmu) / max(mu, 1e-300))
        if res <= options.tol and step_norm <= options.step_tol:
            return psi, mu, it, res
    raise ConvergenceError("Newton iteration limit reached", iteration=options.max_iters,
                           residual=res)


def solve_nonlocal_newton(spec: ProblemSpec, eps: float, mesh: Mesh | None = None,
                          init=None, options: SolverOptions | None = None,
                          mu_init: float | None = None) -> Solution:
    """Damped Newton on the augmented unknown ``(psi, mu)``.

    The default initial guess is the leading-order inner profile.  If Newton
    stalls, the solve restarts along a continuation path from ``2^k eps``.
    """
    options = options or SolverOptions()
    _check_eps(eps)
    mesh = mesh or build_mesh(spec, eps)
    if spec.u0 == 0.0:
        return _zero_solution(spec, eps, mesh, "newton")
    psi0 = inner_profile_guess(spec, eps, mesh) if init is None else np.asarray(init, dtype=float)
    if psi0.shape != (mesh.size,):
        raise DomainError("initial profile must have one value per mesh node")
    psi0 = np.clip(psi0, 0.0, spec.u0)
    mu0 = spec.rho0 if mu_init is None else mu_init
    try:
        psi, mu, its, res = _newton(spec, eps, mesh, psi0, mu0, options)
        path_len = 0
    except ConvergenceError as first:
        log.info("Newton stalled at eps=%g (%s); switching to continuation", eps, first)
        psi, mu, its, res, path_len = _continuation(spec, eps, mesh, options, first)
    sol = Solution(spec, eps, mesh, psi, mu, "newton", its, res,
                   meta={"continuation_steps": path_len})
    return finalize(sol)


def _continuation(spec, eps, mesh, options, first_error):
    last = first_error
    for k in range(1, options.max_continuation + 1):
        ladder = [eps * 2.0**j for j in range(k, 0, -1)] + [eps]
        try:
            psi_prev, mu_prev, its_total = None, None, 0
            for e in ladder:
                m_e = build_mesh(spec, e, mesh.size)
                if psi_prev is None:
                    guess = inner_profile_guess(spec, e, m_e)
                    mu_e = spec.rho0
                else:
                    guess = np.interp(m_e.nodes, prev_nodes, psi_prev)
                    mu_e = mu_prev
                if e == eps:
                    m_e = mesh
                    guess = np.interp(mesh.nodes, prev_nodes, psi_prev)
                psi_prev, mu_prev, its, res = _newton(spec, e, m_e, guess, mu_e, options)
                prev_nodes = m_e.nodes
                its_total += its
            return psi_prev, mu_prev, its_total, res, k
        except ConvergenceError as err:
            last = err
    raise ConvergenceError(f"Newton failed even with continuation: {last}",
                           **getattr(last, "diagnostic", {}))


@dataclass
class LinearSolution:
    mesh: Mesh
    V: np.ndarray
    eps: float
    d: float
    boundary_value: float
    error_estimate: float = math.nan


def _screened_values(spec, eps, d, boundary_value, mesh):
    op = radial_operator(mesh, spec.N).scaled(eps**2)
    rhs = np.zeros(mesh.size - 1)
    rhs[-1] = -op.boundary * boundary_value
    V = kernels.thomas_solve(op.lower, op.diag - d * d, op.upper, rhs)
    if not np.all(np.isfinite(V)):
        raise ConvergenceError("screened system is singular")
    return np.append(V, boundary_value)


def solve_linear_screened(spec: ProblemSpec, eps: float, d: float, boundary_value: float = 1.0,
                          mesh: Mesh | None = None, extrapolate: bool = True) -> LinearSolution:
    """``eps^2 Delta V = d^2 V``, ``V'(0) = 0``, ``V(R) = boundary_value``.

    One tridiagonal solve per mesh.  With ``extrapolate`` the solve is
    repeated on the bisected mesh and the nodal values are Richardson
    extrapolated (the scheme is second order and the meshes are nested).
    """
    _check_eps(eps)
    if not (math.isfinite(d) and d > 0):
        raise DomainError(f"screening constant must be > 0, got {d!r}")
    if mesh is None:
        mesh = build_mesh(spec, eps, layer_multiplier=8.0 / d)
    V = _screened_values(spec, eps, d, boundary_value, mesh)
    err = math.nan
    if extrapolate:
        fine = _screened_values(spec, eps, d, boundary_value, mesh.refine())[::2]
        correction = (fine - V) / 3.0
        V = fine + correction
        err = float(np.max(np.abs(correction)))
    return LinearSolution(mesh, V, eps, d, boundary_value, err)


def screened_exact_interval(r, eps: float, d: float = 1.0, R: float = 1.0, boundary_value: float = 1.0):
    """Closed form of the screened problem on ``(-R, R)``: ``b cosh(d r/eps) / cosh(d R/eps)``."""
    r = np.asarray(r, dtype=float)
    k = d / eps
    return boundary_value * (np.exp(-k * (R + r)) + np.exp(-k * (R - r))) / (1.0 + np.exp(-2.0 * k * R))


def leading_order_solution(spec: ProblemSpec, eps: float, mesh: Mesh | None = None,
                           options: SolverOptions | None = None) -> LocalSolution:
    """Local problem with ``lambda = 1/|B_R|``: the unscaled leading-order profile."""
    mesh = mesh or build_mesh(spec, eps)
    return solve_local_lambda(spec, eps, 1.0 / spec.omega_N, mesh, options, polish=True)
