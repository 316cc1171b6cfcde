"""Boundary-layer solutions of a nonlocal singularly perturbed radial problem
and checks of their asymptotic expansions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ChemolayerError,
    ConfigError,
    ConvergenceError,
    DomainError,
    LevelOutOfRange,
    MeshMismatchError,
    QuadratureError,
)
from .problem import Mesh, ProblemSpec, build_mesh  # noqa: E402
from .solution import Solution  # noqa: E402
from .solvers import (  # noqa: E402
    SolverOptions,
    find_lambda_m,
    solve_linear_screened,
    solve_local_lambda,
    solve_nonlocal_newton,
)

__all__ = [
    "BracketError",
    "ChemolayerError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "LevelOutOfRange",
    "Mesh",
    "MeshMismatchError",
    "ProblemSpec",
    "QuadratureError",
    "Solution",
    "SolverOptions",
    "build_mesh",
    "find_lambda_m",
    "solve_linear_screened",
    "solve_local_lambda",
    "solve_nonlocal_newton",
]
