"""Closed-form layer predictions: nonlocal coefficient, boundary slope,
pointwise profile, interior slope and layer width, plus the three-way
classification of interior points by their distance to the boundary.

Each prediction keeps its leading and first-order parts separate so the
verification layer can fit them independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError
from .problem import ProblemSpec
from .profile import (
    eval_F,
    eval_H,
    eval_Jhat,
    eval_Jtilde,
    eval_f,
    psi_inverse,
    psi_profile,
    slope_integral,
)

RATIO_LO = 0.1
RATIO_HI = 10.0


def _need_layer(spec: ProblemSpec):
    if spec.u0 <= 0:
        raise DomainError("layer predictions need u0 > 0")


def _check_eps(eps, allow_zero=False):
    if not math.isfinite(eps) or eps < 0 or (eps == 0 and not allow_zero):
        raise DomainError(f"invalid eps {eps!r}")


@dataclass(frozen=True)
class Prediction:
    formula_id: str
    inputs: dict
    leading: float
    first_order: float

    @property
    def value(self) -> float:
        return self.leading + self.first_order

    def to_record(self) -> dict:
        return {
            "formula_id": self.formula_id,
            "inputs": dict(self.inputs),
            "terms": {"leading": self.leading, "first_order": self.first_order},
            "value": self.value,
        }


@dataclass(frozen=True)
class MuExpansion:
    leading: float
    first_order_coeff: float

    def predicted(self, eps: float) -> float:
        return self.leading + eps * self.first_order_coeff


@dataclass(frozen=True)
class SlopeExpansion:
    leading_coeff: float  # multiplies 1/eps
    constant_term: float

    def predicted(self, eps: float) -> float:
        return self.leading_coeff / eps + self.constant_term


@dataclass(frozen=True)
class PointwisePrediction:
    spec: ProblemSpec
    d0: float
    PsiR_d0: float

    def terms(self, eps: float) -> tuple[float, float]:
        spec = self.spec
        N, R, m = spec.N, spec.R, spec.m
        level = self.PsiR_d0
        if self.d0 == 0 or level <= 0:
            return level, 0.0
        jt = eval_Jtilde(level, spec.u0) if N > 1 else 0.0
        bracket = (self.d0 * N * eval_H(spec.u0)
                   - R ** (N / 2) * math.sqrt(spec.alpha_N / m) * (N - 1) * jt)
        return level, -(eps / R) * math.sqrt(eval_F(level) / 2.0) * bracket

    def value(self, eps: float) -> float:
        lead, first = self.terms(eps)
        return lead + first

    def interior_slope_terms(self, eps: float) -> tuple[float, float]:
        spec = self.spec
        N, R = spec.N, spec.R
        level = self.PsiR_d0
        H = eval_H(spec.u0)
        sq = math.sqrt(spec.rho0)
        lead = sq * math.sqrt(2.0 * eval_F(level)) / eps
        jh = eval_Jhat(level, spec.u0) if level > 0 else 0.0
        first = (-sq * self.d0 * N / (2.0 * R) * eval_f(level) * H
                 + (N * math.sqrt(eval_F(level) / 2.0) * H + (N - 1) * jh) / R)
        return lead, first

    def interior_slope(self, eps: float) -> float:
        lead, first = self.interior_slope_terms(eps)
        return lead + first


@dataclass(frozen=True)
class WidthPrediction:
    spec: ProblemSpec
    c: float
    x_c: float  # Psi^{-1}(c)

    @property
    def leading_coeff(self) -> float:
        spec = self.spec
        return math.sqrt(spec.alpha_N) * spec.R ** (spec.N / 2) * self.x_c

    @property
    def second_coeff(self) -> float:
        """Coefficient of ``eps^2`` in the width."""
        spec = self.spec
        N, m = spec.N, spec.m
        bracket = (-(N / math.sqrt(m)) * self.x_c * eval_H(spec.u0)
                   + ((N - 1) / m) * eval_Jtilde(self.c, spec.u0))
        return 0.5 * spec.alpha_N * spec.R ** (N - 1) * bracket

    def terms(self, eps: float) -> tuple[float, float]:
        return self.leading_coeff * eps, self.second_coeff * eps**2

    def value(self, eps: float) -> float:
        lead, second = self.terms(eps)
        return lead + second


@dataclass(frozen=True)
class Regime:
    tag: str  # boundary_limit | transition | interior_limit
    ratio: float
    value: float | None = None
    bounds: tuple = field(default=())


def mu_expansion(spec: ProblemSpec) -> MuExpansion:
    _need_layer(spec)
    coeff = (spec.N / spec.R) * math.sqrt(spec.rho0) * eval_H(spec.u0)
    return MuExpansion(spec.rho0, coeff)


def predict_mu(spec: ProblemSpec, eps: float) -> Prediction:
    _check_eps(eps, allow_zero=True)
    if spec.u0 == 0:
        return Prediction("mu", {"eps": eps, **spec.to_dict()}, spec.rho0, 0.0)
    exp = mu_expansion(spec)
    return Prediction("mu", {"eps": eps, **spec.to_dict()}, exp.leading, eps * exp.first_order_coeff)


def slope_expansion(spec: ProblemSpec) -> SlopeExpansion:
    _need_layer(spec)
    N, R, u0 = spec.N, spec.R, spec.u0
    F0 = eval_F(u0)
    lead = math.sqrt(2.0 * spec.m * F0 / spec.alpha_N) / R ** (N / 2)
    const = (N * math.sqrt(F0 / 2.0) * eval_H(u0) - (N - 1) * slope_integral(u0)) / R
    return SlopeExpansion(lead, const)


def predict_slope(spec: ProblemSpec, eps: float) -> Prediction:
    _check_eps(eps)
    exp = slope_expansion(spec)
    return Prediction("slope", {"eps": eps, **spec.to_dict()}, exp.leading_coeff / eps, exp.constant_term)


def psi_R(spec: ProblemSpec, d0: float) -> float:
    """Layer profile in units of ``eps``: ``Psi(d0 / (sqrt(alpha_N) R^{N/2}))``."""
    _need_layer(spec)
    if not math.isfinite(d0) or d0 < 0:
        raise DomainError(f"d0 must be finite and >= 0, got {d0!r}")
    return psi_profile(spec.m, spec.u0, d0 / (math.sqrt(spec.alpha_N) * spec.R ** (spec.N / 2)))


def pointwise(spec: ProblemSpec, d0: float) -> PointwisePrediction:
    return PointwisePrediction(spec, float(d0), psi_R(spec, d0))


def predict_pointwise(spec: ProblemSpec, eps: float, d0: float) -> Prediction:
    _check_eps(eps)
    lead, first = pointwise(spec, d0).terms(eps)
    return Prediction("pointwise", {"eps": eps, "d0": d0, **spec.to_dict()}, lead, first)


def predict_interior_slope(spec: ProblemSpec, eps: float, d0: float) -> Prediction:
    _check_eps(eps)
    lead, first = pointwise(spec, d0).interior_slope_terms(eps)
    return Prediction("interior_slope", {"eps": eps, "d0": d0, **spec.to_dict()}, lead, first)


def width(spec: ProblemSpec, c: float) -> WidthPrediction:
    _need_layer(spec)
    if not (math.isfinite(c) and 0 < c < spec.u0):
        raise DomainError(f"level must lie in (0, u0), got {c!r}")
    return WidthPrediction(spec, float(c), psi_inverse(spec.m, spec.u0, c))


def predict_width(spec: ProblemSpec, eps: float, c: float) -> Prediction:
    _check_eps(eps)
    lead, second = width(spec, c).terms(eps)
    return Prediction("width", {"eps": eps, "c": c, **spec.to_dict()}, lead, second)


def predict(spec: ProblemSpec, formula: str, eps: float, **kw) -> Prediction:
    table = {
        "mu": lambda: predict_mu(spec, eps),
        "slope": lambda: predict_slope(spec, eps),
        "pointwise": lambda: predict_pointwise(spec, eps, kw["d0"]),
        "interior_slope": lambda: predict_interior_slope(spec, eps, kw["d0"]),
        "width": lambda: predict_width(spec, eps, kw["c"]),
    }
    if formula not in table:
        raise DomainError(f"unknown formula {formula!r}; choose from {sorted(table)}")
    return table[formula]()


def _tag(ratio, ratio_lo, ratio_hi):
    if ratio < ratio_lo:
        return "boundary_limit"
    if ratio > ratio_hi:
        return "interior_limit"
    return "transition"


def classify_regime(ell_eps, eps=None, spec: ProblemSpec | None = None,
                    ratio_lo: float = RATIO_LO, ratio_hi: float = RATIO_HI) -> Regime:
    """Classify an interior point by the ratio of its boundary distance to ``eps``.

    ``ell_eps`` is a distance (with ``eps`` a number), a callable of ``eps``
    or a sequence of ``(eps, ell)`` pairs.  For tables the trend of the
    log-log slope decides: slope above 1 sends the ratio to zero, below 1 to
    infinity.  With ``spec`` given, the transition value is ``Psi^R(L)``.
    """
    if not 0 < ratio_lo < ratio_hi:
        raise DomainError("need 0 < ratio_lo < ratio_hi")
    if callable(ell_eps):
        if eps is None:
            raise DomainError("a callable distance needs eps")
        ell_eps = float(ell_eps(eps))
    if isinstance(ell_eps, (list, tuple)) and ell_eps and isinstance(ell_eps[0], (list, tuple)):
        pairs = sorted((float(e), float(l)) for e, l in ell_eps)
        if len(pairs) < 2:
            raise DomainError("a distance table needs at least two points")
        (e1, l1), (e2, l2) = pairs[0], pairs[-1]
        ratio = l1 / e1
        slope = math.log(l2 / l1) / math.log(e2 / e1) if l1 > 0 and l2 > 0 else math.inf
        if slope > 1.0 + 0.1:
            tag = "boundary_limit"
        elif slope < 1.0 - 0.1:
            tag = "interior_limit"
        else:
            tag = _tag(ratio, ratio_lo, ratio_hi)
    else:
        if eps is None or not eps > 0:
            raise DomainError("a single distance needs eps > 0")
        if ell_eps < 0:
            raise DomainError("distance must be >= 0")
        ratio = ell_eps / eps
        tag = _tag(ratio, ratio_lo, ratio_hi)
    u0 = spec.u0 if spec is not None else None
    if tag == "boundary_limit":
        return Regime(tag, ratio, u0)
    if tag == "interior_limit":
        return Regime(tag, ratio, 0.0)
    value = psi_R(spec, ratio) if spec is not None else None
    return Regime(tag, ratio, value, (0.0, u0) if u0 is not None else ())
