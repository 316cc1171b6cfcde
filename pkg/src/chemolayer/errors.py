"""Exception hierarchy shared by the solver, asymptotics and CLI layers."""


class ChemolayerError(Exception):
    """Base class for all package errors."""


class DomainError(ChemolayerError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class QuadratureError(ChemolayerError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConvergenceError(ChemolayerError):
    """An iterative solver stopped before meeting its tolerance.

    ``diagnostic`` carries whatever the solver knew when it gave up
    (last step norm, last sup-difference, iteration count, ...).
    """

    def __init__(self, message, **diagnostic):
        super().__init__(message)
        self.diagnostic = diagnostic


class BracketError(ChemolayerError):
    """A root could not be bracketed within the configured search bounds."""


class LevelOutOfRange(DomainError):
    """Requested level is not attained by the discrete profile."""


class MeshMismatchError(ChemolayerError, ValueError):
    """Two profiles that must share a mesh do not."""


class ConfigError(ChemolayerError, ValueError):
    """Run configuration failed validation."""
