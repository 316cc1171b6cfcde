"""Converged solutions and the quantities read off them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, LevelOutOfRange
from .problem import Mesh, ProblemSpec, ball_integral
from .profile import F_values


@dataclass(frozen=True, eq=False)
class Solution:
    spec: ProblemSpec
    eps: float
    mesh: Mesh
    psi: np.ndarray
    mu_eps: float
    solver_path: str
    iterations: int
    achieved_residual: float
    slope_R: float = math.nan
    K_eps: float = math.nan
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.psi.setflags(write=False)

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    def at(self, r: float) -> float:
        """Profile value at an arbitrary radius (local cubic interpolation)."""
        return interpolate_value(self.mesh.nodes, self.psi, r)


def finalize(sol: Solution) -> Solution:
    """Fill the derived fields ``slope_R`` and ``K_eps``."""
    if sol.spec.u0 == 0.0:
        return replace(sol, slope_R=0.0, K_eps=0.0)
    return replace(sol, slope_R=boundary_slope(sol), K_eps=compute_K_eps(sol))


def fornberg_weights(x0: float, x: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..order`` at ``x0`` (Fornberg 1988).

    Returns an array of shape ``(order + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((order + 1, n))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _stencil(nodes: np.ndarray, r: float, width: int = 4) -> slice:
    i = int(np.searchsorted(nodes, r))
    lo = max(0, min(i - width // 2, nodes.size - width))
    return slice(lo, lo + width)


def interpolate_value(nodes, values, r, width=4):
    s = _stencil(nodes, r, width)
    w = fornberg_weights(r, nodes[s], 0)[0]
    return float(w @ values[s])


def interpolate_derivative(nodes, values, r, width=4):
    s = _stencil(nodes, r, width)
    w = fornberg_weights(r, nodes[s], 1)[1]
    return float(w @ values[s])


def nodal_derivative(nodes: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Second-order centred differences on the graded mesh.

    ``psi'(0) = 0`` by symmetry; the last node uses a one-sided
    third-order stencil.
    """
    h0 = np.diff(nodes)[:-1]
    h1 = np.diff(nodes)[1:]
    dpsi = np.empty_like(psi)
    # three-point non-uniform centred weights
    dpsi[1:-1] = (-h1 / (h0 * (h0 + h1)) * psi[:-2]
                  + (h1 - h0) / (h0 * h1) * psi[1:-1]
                  + h0 / (h1 * (h0 + h1)) * psi[2:])
    dpsi[0] = 0.0
    dpsi[-1] = float(fornberg_weights(nodes[-1], nodes[-4:], 1)[1] @ psi[-4:])
    return dpsi


def compute_mu(sol: Solution) -> float:
    """``m / int_{B_R} e^psi`` with the solver's own quadrature."""
    spec = sol.spec
    return spec.m / ball_integral(np.exp(sol.psi), sol.mesh, spec.N, spec.alpha_N)


def compute_K_eps(sol: Solution) -> float:
    """Integration constant of the first integral, evaluated at ``r = R/2``."""
    r = 0.5 * sol.spec.R
    psi_half = max(interpolate_value(sol.nodes, sol.psi, r), 0.0)
    dpsi_half = interpolate_derivative(sol.nodes, sol.psi, r)
    return 0.5 * sol.eps**2 * dpsi_half**2 - sol.mu_eps * F_values(psi_half)


def boundary_slope(sol: Solution) -> float:
    """One-sided third-order estimate of ``psi'(R)``."""
    nodes = sol.nodes
    if sol.mesh.count_in_layer() < 4 or nodes.size < 4:
        raise DomainError("boundary slope needs four nodes inside the layer zone")
    w = fornberg_weights(nodes[-1], nodes[-4:], 1)[1]
    return float(w @ sol.psi[-4:])


def level_crossing(sol: Solution, c: float) -> float:
    """Radius ``r`` with ``psi(r) = c`` by monotone cubic interpolation."""
    psi = sol.psi
    u0 = sol.spec.u0
    if not math.isfinite(c) or c <= psi[0] or c > u0:
        raise LevelOutOfRange(f"level {c!r} not in (psi(0)={psi[0]!r}, u0={u0!r}]")
    if c == u0:
        return sol.spec.R
    i = int(np.searchsorted(psi, c))  # psi[i-1] < c <= psi[i]
    if psi[i] == c:
        return float(sol.nodes[i])
    lo = max(0, i - 2)
    hi = min(psi.size, i + 2)
    r = sol.nodes[lo:hi]
    interp = PchipInterpolator(r, psi[lo:hi])
    return float(brentq(lambda x: interp(x) - c, sol.nodes[i - 1], sol.nodes[i],
                        xtol=1e-15, rtol=4 * np.finfo(float).eps))


def layer_width(sol: Solution, c: float) -> float:
    return sol.spec.R - level_crossing(sol, c)
