"""Scalar nonlinearity, inner layer profile and the expansion functionals.

Everything here is specialised to the nonlinearity ``f(s) = s e^s`` and its
primitive ``F(s) = (s - 1) e^s + 1``.  The inner profile ``Psi`` solves

    -Psi'(x) = sqrt(2 m F(Psi)),   Psi(0) = u0,   Psi(inf) = 0,

and is evaluated through its inverse, which is a plain quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, QuadratureError

QUAD_TOL = 1e-10
JTILDE_OUTER_TOL = 1e-9
JTILDE_INNER_TOL = 1e-11
TAIL_FRACTION = 1e-8

# below this the closed form of F loses relative accuracy to cancellation
_SERIES_CUTOFF = 0.5
_SERIES_TERMS = 28
# (k - 1) / k! for k = 2 .. _SERIES_TERMS + 1, highest power first for Horner
_SERIES_COEFFS = np.array(
    [(k - 1) / math.factorial(k) for k in range(_SERIES_TERMS + 1, 1, -1)]
)


@dataclass(frozen=True)
class NonlinearityPoint:
    s: float
    f_val: float
    F_val: float


@dataclass(frozen=True)
class ProfileQuery:
    m: float
    u0: float
    x: float
    value: float


@dataclass(frozen=True)
class FunctionalValues:
    u0: float
    H: float
    Jtilde: float
    Jhat: float
    lower: float


def _check_finite(**kwargs):
    for name, value in kwargs.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite, got {value!r}")


def _check_state(s, name="s"):
    _check_finite(**{name: s})
    if np.any(np.asarray(s) < 0):
        raise DomainError(f"{name} must be >= 0, got {s!r}")


def _quad(func, a, b, tol=QUAD_TOL, limit=200):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) == 4 or not math.isfinite(value):
        msg = out[3] if len(out) == 4 else "non-finite result"
        if abserr > 100 * tol * max(1.0, abs(value)):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] did not converge: {msg}", achieved=abserr
            )
    return value


def f_values(s):
    """Vectorised ``s e^s`` without domain checks (solver hot path)."""
    s = np.asarray(s, dtype=float)
    return s * np.exp(s)


def fprime_values(s):
    s = np.asarray(s, dtype=float)
    return (1.0 + s) * np.exp(s)


def F_values(s):
    """Vectorised ``(s - 1) e^s + 1``, accurate to full relative precision near 0."""
    s = np.asarray(s, dtype=float)
    out = (s - 1.0) * np.exp(s) + 1.0
    small = np.abs(s) < _SERIES_CUTOFF
    if np.any(small):
        x = s[small] if s.ndim else s
        acc = np.polyval(_SERIES_COEFFS, x)
        series = acc * x * x
        if s.ndim:
            out[small] = series
        else:
            out = series
    return out if s.ndim else float(out)


def eval_f(s):
    """``f(s) = s e^s`` for ``s >= 0``."""
    _check_state(s)
    out = f_values(s)
    return float(out) if np.ndim(out) == 0 else out


def eval_F(s):
    """``F(s) = (s - 1) e^s + 1``, the primitive of ``f`` with ``F(0) = 0``."""
    _check_state(s)
    return F_values(s)


def nonlinearity_point(s) -> NonlinearityPoint:
    return NonlinearityPoint(float(s), eval_f(s), eval_F(s))


@lru_cache(maxsize=4096)
def sqrtF_integral(s: float) -> float:
    """``int_0^s sqrt(F(t)) dt``."""
    if s == 0.0:
        return 0.0
    return _quad(lambda t: math.sqrt(F_values(t)), 0.0, s)


@lru_cache(maxsize=1024)
def _H(u0: float) -> float:
    integral = _quad(lambda t: math.sqrt(F_values(t) / 2.0), 0.0, u0)
    return -math.sqrt(2.0 * F_values(u0)) + integral


def eval_H(u0: float) -> float:
    """The negative constant ``-sqrt(2F(u0)) + int_0^u0 sqrt(F/2)``.

    It multiplies every curvature correction of the layer expansions.
    """
    _check_finite(u0=u0)
    if u0 <= 0:
        raise DomainError(f"u0 must be > 0, got {u0!r}")
    return _H(float(u0))


def slope_integral(level: float) -> float:
    """``int_0^level sqrt(F(t) / F(level)) dt``."""
    if level <= 0:
        return 0.0
    return sqrtF_integral(float(level)) / math.sqrt(F_values(level))


def _jtilde_integrand_log(log_s: float) -> float:
    # outer variable s = exp(log_s); integrand s * G(s) / F(s)^{3/2}
    s = math.exp(log_s)
    Fs = F_values(s)
    G = _quad(lambda t: math.sqrt(F_values(t)), 0.0, s, tol=JTILDE_INNER_TOL)
    return s * G / (Fs * math.sqrt(Fs))


@lru_cache(maxsize=4096)
def _Jtilde(lower: float, u0: float) -> float:
    if lower == u0:
        return 0.0
    return _quad(_jtilde_integrand_log, math.log(lower), math.log(u0), tol=JTILDE_OUTER_TOL)


def eval_Jtilde(lower: float, u0: float) -> float:
    """``int_lower^u0 F(s)^{-1} int_0^s sqrt(F(t)/F(s)) dt ds``.

    The integrand behaves like ``1/s`` at the origin, so ``lower`` must be
    strictly positive.
    """
    _check_finite(lower=lower, u0=u0)
    if u0 <= 0:
        raise DomainError(f"u0 must be > 0, got {u0!r}")
    if not 0 < lower <= u0:
        raise DomainError(f"lower must lie in (0, u0], got lower={lower!r}, u0={u0!r}")
    return _Jtilde(float(lower), float(u0))


def eval_Jhat(level: float, u0: float) -> float:
    """``f(level) Jtilde(level, u0) / 2 - int_0^level sqrt(F(t)/F(level)) dt``."""
    jt = eval_Jtilde(level, u0)
    return 0.5 * float(f_values(level)) * jt - slope_integral(level)


def functional_values(u0: float, lower: float | None = None) -> FunctionalValues:
    lower = u0 if lower is None else lower
    return FunctionalValues(
        u0=u0,
        H=eval_H(u0),
        Jtilde=eval_Jtilde(lower, u0),
        Jhat=eval_Jhat(lower, u0),
        lower=lower,
    )


def _check_profile_args(m, u0):
    _check_finite(m=m, u0=u0)
    if m <= 0:
        raise DomainError(f"m must be > 0, got {m!r}")
    if u0 <= 0:
        raise DomainError(f"u0 must be > 0, got {u0!r}")


def _inverse_log(m: float, u0: float, log_c: float) -> float:
    # t = exp(s): dt / sqrt(2 m F(t)) = t / sqrt(2 m F(t)) ds, bounded as t -> 0
    def integrand(s):
        t = math.exp(s)
        return t / math.sqrt(2.0 * m * F_values(t))

    return _quad(integrand, log_c, math.log(u0))


def psi_inverse(m: float, u0: float, c: float) -> float:
    """Stretched coordinate where the inner profile reaches level ``c``."""
    _check_profile_args(m, u0)
    _check_finite(c=c)
    if not 0 < c <= u0:
        raise DomainError(f"level must lie in (0, u0], got c={c!r}, u0={u0!r}")
    if c == u0:
        return 0.0
    return _cached_inverse(float(m), float(u0), float(c))


@lru_cache(maxsize=8192)
def _cached_inverse(m, u0, c):
    return _inverse_log(m, u0, math.log(c))


def psi_profile(m: float, u0: float, x: float) -> float:
    """Inner profile ``Psi(x)`` for the mass parameter ``m``.

    Bracketed root finding on the inverse down to ``1e-8 u0``; beyond that
    the exponential tail ``Psi(x0) exp(-sqrt(m)(x - x0))`` is returned.
    """
    _check_profile_args(m, u0)
    _check_finite(x=x)
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    if x == 0:
        return float(u0)
    return _cached_profile(float(m), float(u0), float(x))


@lru_cache(maxsize=8192)
def _cached_profile(m, u0, x):
    c_tail = TAIL_FRACTION * u0
    x_tail = _cached_inverse(m, u0, c_tail)
    if x >= x_tail:
        return c_tail * math.exp(-math.sqrt(m) * (x - x_tail))
    lo, hi = math.log(c_tail), math.log(u0)
    log_c = optimize.brentq(
        lambda s: _inverse_log(m, u0, s) - x, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps
    )
    return math.exp(log_c)


def profile_query(m, u0, x) -> ProfileQuery:
    return ProfileQuery(m, u0, x, psi_profile(m, u0, x))


def psi_profile_table(m: float, u0: float, x_max: float, n: int = 400):
    """Tabulate ``Psi`` on ``[0, x_max]``, for initial guesses and plots."""
    xs = np.linspace(0.0, x_max, n)
    return xs, np.array([psi_profile(m, u0, x) for x in xs])
