import math

import numpy as np
import pytest

from chemolayer import verify
from chemolayer.errors import ConvergenceError, DomainError
from chemolayer.problem import ProblemSpec, ball_integral, build_mesh, uniform_mesh
from chemolayer.solution import fornberg_weights
from chemolayer.solvers import (
    SolverOptions,
    constraint_residual,
    find_lambda_m,
    leading_order_solution,
    screened_exact_interval,
    solve_linear_screened,
    solve_local_lambda,
    solve_nonlocal_newton,
)

from conftest import BASE, bisection_solution, newton_solution


def test_zero_boundary_value_gives_zero():
    spec = ProblemSpec(u0=0.0)
    sol = solve_nonlocal_newton(spec, 0.05)
    assert np.all(sol.psi == 0.0)
    assert sol.mu_eps == pytest.approx(spec.rho0)
    trace, bis = find_lambda_m(spec, 0.05)
    assert np.all(bis.psi == 0.0) and trace.lambda_m == pytest.approx(1 / spec.omega_N)


@pytest.mark.parametrize("spec", [BASE, ProblemSpec(N=1, R=0.5), ProblemSpec(N=3, R=2.0, m=3.0, u0=2.0)])
def test_solution_bounds_and_monotonicity(spec):
    sol = solve_nonlocal_newton(spec, 0.02, build_mesh(spec, 0.02, 2001))
    assert sol.psi[-1] == spec.u0
    assert np.all(sol.psi > 0) and np.all(sol.psi <= spec.u0)
    assert np.all(np.diff(sol.psi) >= 0)


def test_local_solution_monotone_in_lambda():
    mesh = build_mesh(BASE, 0.02, 1001)
    lams = [0.1, 0.2, 0.4, 0.8]
    sols = [solve_local_lambda(BASE, 0.02, lam, mesh).psi for lam in lams]
    for a, b in zip(sols, sols[1:]):
        assert np.all(b <= a + 1e-12)


def test_constraint_residual_increasing_in_lambda():
    mesh = build_mesh(BASE, 0.02, 1001)
    lams = np.linspace(0.1, 1.0, 8)
    g = [constraint_residual(BASE, mesh, solve_local_lambda(BASE, 0.02, lam, mesh)) for lam in lams]
    assert np.all(np.diff(g) > 0)


def test_bisection_trace():
    trace, sol = bisection_solution()
    assert trace.lambda_lo < trace.lambda_m < trace.lambda_hi
    lams = np.array([lam for lam, _ in trace.history])
    g = np.array(trace.residuals)
    order = np.argsort(lams)
    assert np.all(np.diff(g[order]) > 0)
    assert sol.achieved_residual <= 1e-10
    assert sol.mu_eps == pytest.approx(trace.lambda_m * BASE.m)


def test_bisection_constraint_holds():
    _, sol = bisection_solution()
    integral = ball_integral(np.exp(sol.psi), sol.mesh, 2)
    assert abs(sol.mu_eps / BASE.m * integral - 1.0) <= 1e-10


def test_cross_solver_agreement():
    _, bis = bisection_solution()
    newt = newton_solution()
    assert np.max(np.abs(bis.psi - newt.psi)) <= 1e-8
    assert abs(bis.mu_eps - newt.mu_eps) <= 1e-8


def test_newton_residual():
    sol = newton_solution()
    assert sol.achieved_residual <= 1e-10
    assert sol.solver_path == "newton"


def test_mesh_refinement_second_order():
    spec, eps = BASE, 0.02
    mesh = build_mesh(spec, eps, 501)
    sols = []
    for _ in range(3):
        sols.append(solve_nonlocal_newton(spec, eps, mesh))
        mesh = mesh.refine()
    d1 = np.max(np.abs(sols[1].psi[::2] - sols[0].psi))
    d2 = np.max(np.abs(sols[2].psi[::4] - sols[1].psi[::2]))
    assert d1 / d2 >= 3.5
    m1 = abs(sols[1].mu_eps - sols[0].mu_eps)
    m2 = abs(sols[2].mu_eps - sols[1].mu_eps)
    assert m1 / m2 >= 3.5


@pytest.mark.parametrize("N", [1, 2, 3])
def test_scaling_invariance(N):
    # psi_{kR, k eps, k^N m}(k r) = psi_{R, eps, m}(r): the nonlocal coefficient is scale free
    kappa, eps = 2.5, 0.02
    a = ProblemSpec(N=N, R=1.0, m=1.0)
    b = ProblemSpec(N=N, R=kappa, m=kappa**N)
    sa = solve_nonlocal_newton(a, eps, build_mesh(a, eps, 1001))
    sb = solve_nonlocal_newton(b, kappa * eps, build_mesh(b, kappa * eps, 1001))
    np.testing.assert_allclose(sb.nodes, kappa * sa.nodes, rtol=1e-12)
    assert np.max(np.abs(sa.psi - sb.psi)) <= 1e-8
    assert sb.mu_eps == pytest.approx(sa.mu_eps, rel=1e-8)
    assert sb.slope_R == pytest.approx(sa.slope_R / kappa, rel=1e-8)


def test_newton_iteration_cap_raises():
    with pytest.raises(ConvergenceError) as info:
        solve_nonlocal_newton(BASE, 0.01, build_mesh(BASE, 0.01, 501),
                              options=SolverOptions(max_iters=1, max_continuation=0))
    assert info.value.diagnostic["iteration"] == 1
    assert info.value.diagnostic["residual"] > 1e-10


def test_sweep_records_failure():
    opts = verify.SweepOptions(n_nodes=501, solver_options=SolverOptions(max_iters=1, max_continuation=0))
    res = verify.run_sweep(BASE, [0.02, 0.01], ["mu"], opts)
    assert [r["status"] for r in res.records] == ["failed", "failed"]
    assert all(r["error"] for r in res.records)
    assert not res.converged()


def test_monotone_stall_raises():
    mesh = build_mesh(BASE, 0.01, 501)
    with pytest.raises(ConvergenceError):
        solve_local_lambda(BASE, 0.01, 0.3, mesh, SolverOptions(monotone_max_iters=2))


@pytest.mark.parametrize("bad", [0.0, -0.1, math.nan])
def test_bad_eps(bad):
    with pytest.raises(DomainError):
        solve_nonlocal_newton(BASE, bad)


def test_bad_init_shape():
    with pytest.raises(DomainError):
        solve_nonlocal_newton(BASE, 0.02, build_mesh(BASE, 0.02, 101), init=np.ones(5))


def test_leading_order_below_solution():
    sol = newton_solution()
    lead = leading_order_solution(BASE, sol.eps, sol.mesh)
    # mu_eps < rho0, so the nonlocal solution lies above the leading-order one
    assert sol.mu_eps < BASE.rho0
    assert np.all(sol.psi - lead.psi >= -1e-14)


# linear screened problem: closed forms on the interval and the ball in R^3

@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_linear_oracle_interval(eps):
    spec = ProblemSpec(N=1)
    mesh = build_mesh(spec, eps, 4001, layer_multiplier=8.0)
    lin = solve_linear_screened(spec, eps, 1.0, 1.0, mesh)
    assert np.max(np.abs(lin.V - screened_exact_interval(mesh.nodes, eps))) <= 1e-8
    slope = fornberg_weights(1.0, mesh.nodes[-4:], 1)[1] @ lin.V[-4:]
    assert slope / (math.tanh(1 / eps) / eps) - 1 == pytest.approx(0.0, abs=1e-6)


def test_linear_oracle_ball_r3():
    spec, eps, d = ProblemSpec(N=3), 0.05, 2.0
    mesh = build_mesh(spec, eps, 4001, layer_multiplier=4.0)
    lin = solve_linear_screened(spec, eps, d, 0.5, mesh)
    k = d / eps
    r = mesh.nodes
    with np.errstate(over="ignore"):
        exact = 0.5 * np.where(r > 0, np.exp(k * (r - 1)) * (1 - np.exp(-2 * k * r))
                               / (1 - np.exp(-2 * k)) / np.where(r > 0, r, 1), 0.0)
    exact[0] = 0.5 * 2 * k * np.exp(-k) / (1 - np.exp(-2 * k))
    assert np.max(np.abs(lin.V - exact)) <= 1e-8


def test_linear_extrapolation_improves():
    spec, eps = ProblemSpec(N=1), 0.1
    mesh = build_mesh(spec, eps, 801, layer_multiplier=8.0)
    exact = screened_exact_interval(mesh.nodes, eps)
    plain = solve_linear_screened(spec, eps, 1.0, 1.0, mesh, extrapolate=False)
    rich = solve_linear_screened(spec, eps, 1.0, 1.0, mesh)
    e_plain = np.max(np.abs(plain.V - exact))
    e_rich = np.max(np.abs(rich.V - exact))
    assert e_rich < 1e-3 * e_plain
    # the correction estimates the error of the unextrapolated solve on the bisected mesh
    assert rich.error_estimate == pytest.approx(e_plain / 4, rel=0.05)


def test_linear_uniform_mesh_consistency():
    spec, eps = ProblemSpec(N=1), 0.25
    mesh = uniform_mesh(1.0, 2001, 1)
    lin = solve_linear_screened(spec, eps, 1.0, 2.0, mesh)
    assert np.max(np.abs(lin.V - screened_exact_interval(mesh.nodes, eps, boundary_value=2.0))) <= 1e-10
