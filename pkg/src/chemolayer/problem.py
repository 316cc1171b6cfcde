"""Problem instance, graded mesh and the radial finite-volume operator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

DEFAULT_LAYER_CONSTANT = 8.0


@dataclass(frozen=True)
class ProblemSpec:
    """Physical instance: radial problem on the ball ``B_R`` in ``R^N``.

    ``N = 1`` is the symmetric interval ``(-R, R)``.
    """

    N: int = 2
    R: float = 1.0
    m: float = 1.0
    u0: float = 1.0
    geometry: str = "ball"

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool) or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N!r}")
        for name in ("R", "m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.u0) and self.u0 >= 0):
            raise DomainError(f"u0 must be finite and >= 0, got {self.u0!r}")
        if self.geometry != "ball":
            raise DomainError(f"unsupported geometry {self.geometry!r}")

    @property
    def alpha_N(self) -> float:
        """Volume of the unit ball in ``R^N``."""
        return math.pi ** (self.N / 2) / math.gamma(self.N / 2 + 1)

    @property
    def omega_N(self) -> float:
        return self.alpha_N * self.R**self.N

    @property
    def rho0(self) -> float:
        """Limit of the nonlocal coefficient, ``m / |B_R|``."""
        return self.m / self.omega_N

    @property
    def sphere_area(self) -> float:
        """Surface area of the unit sphere, ``N alpha_N``."""
        return self.N * self.alpha_N

    def to_dict(self):
        return {"N": int(self.N), "R": self.R, "m": self.m, "u0": self.u0, "geometry": self.geometry}


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    transition: float
    layer_fraction: float
    layer_width: float = 0.0
    N: int = field(default=1, compare=False)

    def __post_init__(self):
        r = self.nodes
        if r.ndim != 1 or r.size < 3:
            raise DomainError("mesh needs at least three nodes")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DomainError("mesh nodes must start at 0 and increase strictly")
        r.setflags(write=False)

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    def volumes(self, N: int) -> np.ndarray:
        """Radial control volumes ``int r^{N-1} dr`` over each dual cell."""
        r = self.nodes
        half = np.concatenate(([0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]))
        return (half[1:] ** N - half[:-1] ** N) / N

    def refine(self) -> Mesh:
        """Halve every interval; the old nodes stay nodes."""
        r = self.nodes
        fine = np.empty(2 * r.size - 1)
        fine[0::2] = r
        fine[1::2] = 0.5 * (r[1:] + r[:-1])
        return Mesh(fine, self.transition, self.layer_fraction, self.layer_width, self.N)

    def same_as(self, other: Mesh) -> bool:
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)

    def count_in_layer(self) -> int:
        return int(np.count_nonzero(self.nodes >= self.R - self.layer_width))


def build_mesh(spec: ProblemSpec, eps: float, n_nodes: int = 4001,
               layer_multiplier: float | None = None, layer_fraction: float = 0.5) -> Mesh:
    """Piecewise-uniform two-zone mesh with a fine zone of width ``Lambda * eps`` at ``r = R``.

    ``Lambda`` defaults to ``8 / sqrt(rho0)``, i.e. eight decay lengths of the
    linearised layer.  For ``eps >= R/4`` the mesh is uniform.
    """
    if n_nodes < 5:
        raise DomainError("n_nodes must be >= 5")
    if not 0 < layer_fraction < 1:
        raise DomainError("layer_fraction must lie in (0, 1)")
    if not (math.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be finite and > 0, got {eps!r}")
    R = spec.R
    n = n_nodes - 1
    if layer_multiplier is None:
        layer_multiplier = DEFAULT_LAYER_CONSTANT / math.sqrt(spec.rho0)
    width = min(layer_multiplier * eps, 0.5 * R)
    if eps >= 0.25 * R:
        nodes = np.linspace(0.0, R, n_nodes)
        return Mesh(nodes, 0.0, 1.0, R, spec.N)
    tau = R - width
    n_fine = int(round(layer_fraction * n))
    n_fine = min(max(n_fine, 1), n - 1)
    coarse = np.linspace(0.0, tau, n - n_fine + 1)
    fine = np.linspace(tau, R, n_fine + 1)
    nodes = np.concatenate((coarse, fine[1:]))
    nodes[-1] = R
    return Mesh(nodes, tau, layer_fraction, width, spec.N)


def uniform_mesh(R: float, n_nodes: int, N: int = 1) -> Mesh:
    return Mesh(np.linspace(0.0, R, n_nodes), 0.0, 1.0, R, N)


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """Tridiagonal form of ``(r^{N-1} psi')' / r^{N-1}`` on the interior unknowns.

    Rows are the nodes ``0 .. n-1``; the Dirichlet node ``n`` enters only
    through ``boundary`` (the coefficient multiplying ``psi(R)`` in the last
    row).  At ``r = 0`` the zero-flux cell reproduces ``N psi''(0)``.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    boundary: float
    volumes: np.ndarray

    def apply(self, psi_int: np.ndarray, psi_R: float) -> np.ndarray:
        out = self.diag * psi_int
        out[1:] += self.lower[1:] * psi_int[:-1]
        out[:-1] += self.upper[:-1] * psi_int[1:]
        out[-1] += self.boundary * psi_R
        return out

    def scaled(self, factor: float) -> RadialOperator:
        return RadialOperator(self.lower * factor, self.diag * factor, self.upper * factor,
                              self.boundary * factor, self.volumes)


def radial_operator(mesh: Mesh, N: int) -> RadialOperator:
    r = mesh.nodes
    h = np.diff(r)
    mid = 0.5 * (r[1:] + r[:-1])
    flux = mid ** (N - 1) / h  # conductance across each face
    V = mesh.volumes(N)
    n = r.size - 1
    Vi = V[:n]
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = flux[: n - 1] / Vi[1:]
    upper[:] = flux[:n] / Vi
    diag = -(upper + lower)
    boundary = float(upper[-1])
    upper[-1] = 0.0
    return RadialOperator(lower, diag, upper, boundary, V)


def ball_integral(values: np.ndarray, mesh: Mesh, N: int, alpha_N: float | None = None) -> float:
    """``int_{B_R} g`` for a radial ``g`` given at the nodes (dual-cell quadrature)."""
    if alpha_N is None:
        alpha_N = math.pi ** (N / 2) / math.gamma(N / 2 + 1)
    return N * alpha_N * float(np.dot(mesh.volumes(N), values))
