import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chemolayer import asymptotics as asym
from chemolayer.errors import DomainError
from chemolayer.problem import ProblemSpec
from chemolayer.profile import eval_F, eval_H

BASE = ProblemSpec(N=2, R=1.0, m=1.0, u0=1.0)

# independent 40-digit evaluations of the closed forms at N=2, R=m=u0=1
MU_FIRST_ORDER = -1.2399263725347924961
WIDTH_LEADING_HALF = 0.96025136994564454351
WIDTH_SECOND_HALF = 2.4857116286126138186

specs = st.builds(
    ProblemSpec,
    N=st.integers(min_value=1, max_value=3),
    R=st.floats(min_value=0.3, max_value=3.0),
    m=st.floats(min_value=0.2, max_value=5.0),
    u0=st.floats(min_value=0.2, max_value=2.5),
)


def test_mu_reference():
    exp = asym.mu_expansion(BASE)
    assert exp.leading == pytest.approx(1 / math.pi, rel=1e-15)
    assert exp.first_order_coeff == pytest.approx(MU_FIRST_ORDER, rel=1e-10)
    assert exp.predicted(0.01) == pytest.approx(1 / math.pi + 0.01 * MU_FIRST_ORDER, rel=1e-12)


def test_mu_zero_eps_is_rho0():
    p = asym.predict_mu(BASE, 0.0)
    assert p.value == BASE.rho0 and p.first_order == 0.0


def test_mu_zero_boundary_value():
    spec = ProblemSpec(u0=0.0)
    assert asym.predict_mu(spec, 0.1).value == spec.rho0


def test_slope_reference():
    exp = asym.slope_expansion(BASE)
    assert exp.leading_coeff == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    # at N = 2, R = m = u0 = 1 the first-order constant collapses to -2
    assert exp.constant_term == pytest.approx(-2.0, abs=1e-10)


def test_width_reference():
    w = asym.width(BASE, 0.5)
    assert w.leading_coeff == pytest.approx(WIDTH_LEADING_HALF, rel=1e-10)
    assert w.second_coeff == pytest.approx(WIDTH_SECOND_HALF, rel=1e-9)
    assert w.value(0.01) == pytest.approx(0.01 * WIDTH_LEADING_HALF + 1e-4 * WIDTH_SECOND_HALF, rel=1e-9)


@given(specs)
def test_interior_slope_at_boundary_is_slope(spec):
    eps = 0.01
    lead, first = asym.pointwise(spec, 0.0).interior_slope_terms(eps)
    exp = asym.slope_expansion(spec)
    assert lead == pytest.approx(exp.leading_coeff / eps, rel=1e-12)
    assert first == pytest.approx(exp.constant_term, rel=1e-10, abs=1e-12)


@given(specs)
def test_pointwise_at_boundary_is_u0(spec):
    assert asym.pointwise(spec, 0.0).value(0.03) == spec.u0


@given(specs, st.floats(min_value=0.2, max_value=3.0))
def test_interior_slope_is_derivative_of_pointwise(spec, d0):
    # psi(R - d0 eps) differentiated in r is -(1/eps) d/dd0, term by term
    eps, h = 0.01, 1e-5
    a = asym.pointwise(spec, d0 + h).terms(eps)
    b = asym.pointwise(spec, d0 - h).terms(eps)
    lead, first = asym.pointwise(spec, d0).interior_slope_terms(eps)
    assert -(a[0] - b[0]) / (2 * h * eps) == pytest.approx(lead, rel=1e-7)
    assert -(a[1] - b[1]) / (2 * h * eps) == pytest.approx(first, rel=1e-5, abs=1e-7)


@given(specs, st.floats(min_value=0.1, max_value=0.9))
def test_width_inverts_pointwise_leading(spec, frac):
    c = frac * spec.u0
    w = asym.width(spec, c)
    d0 = w.leading_coeff  # width / eps at leading order
    assert asym.psi_R(spec, d0) == pytest.approx(c, rel=1e-8)


@pytest.mark.parametrize("N", [2, 3])
def test_width_increasing_in_R(N):
    radii = [0.5, 0.75, 1.0, 1.5, 2.0]
    eps, c = 0.01, 0.5
    widths = [asym.width(ProblemSpec(N=N, R=R), c).value(eps) for R in radii]
    assert np.all(np.diff(widths) > 0)


def test_width_level_checks():
    for c in (0.0, 1.0, 1.5, math.nan):
        with pytest.raises(DomainError):
            asym.width(BASE, c)


def test_layer_predictions_need_positive_u0():
    with pytest.raises(DomainError):
        asym.slope_expansion(ProblemSpec(u0=0.0))


def test_predict_dispatch_and_record():
    rec = asym.predict(BASE, "width", 0.01, c=0.5).to_record()
    assert rec["formula_id"] == "width"
    assert set(rec["terms"]) == {"leading", "first_order"}
    assert rec["value"] == pytest.approx(rec["terms"]["leading"] + rec["terms"]["first_order"])
    with pytest.raises(DomainError):
        asym.predict(BASE, "curvature", 0.01)
    with pytest.raises(DomainError):
        asym.predict(BASE, "slope", -0.01)


def test_pointwise_interval_skips_double_integral():
    spec = ProblemSpec(N=1)
    lead, first = asym.pointwise(spec, 1.0).terms(0.01)
    level = asym.psi_R(spec, 1.0)
    assert first == pytest.approx(-0.01 * math.sqrt(eval_F(level) / 2) * eval_H(1.0), rel=1e-12)


def test_regime_numbers():
    eps = 0.005
    tags = [asym.classify_regime(d, eps).tag for d in (eps**2, eps, math.sqrt(eps))]
    assert tags == ["boundary_limit", "transition", "interior_limit"]


def test_regime_callable_and_values():
    r = asym.classify_regime(lambda e: 2 * e, 0.01, spec=BASE)
    assert r.tag == "transition" and r.ratio == pytest.approx(2.0)
    assert r.value == pytest.approx(asym.psi_R(BASE, 2.0))
    assert asym.classify_regime(1e-6, 0.01, spec=BASE).value == BASE.u0
    assert asym.classify_regime(0.5, 0.01, spec=BASE).value == 0.0


def test_regime_table_uses_trend():
    eps = [0.04, 0.02, 0.01]
    assert asym.classify_regime([(e, e**2) for e in eps]).tag == "boundary_limit"
    assert asym.classify_regime([(e, math.sqrt(e)) for e in eps]).tag == "interior_limit"
    assert asym.classify_regime([(e, 3 * e) for e in eps]).tag == "transition"


@given(st.floats(min_value=1e-4, max_value=0.1), st.floats(min_value=0.0, max_value=100.0))
def test_regime_thresholds(eps, ratio):
    tag = asym.classify_regime(ratio * eps, eps).tag
    if ratio < asym.RATIO_LO * (1 - 1e-9):
        assert tag == "boundary_limit"
    elif ratio > asym.RATIO_HI * (1 + 1e-9):
        assert tag == "interior_limit"
    elif asym.RATIO_LO * (1 + 1e-9) < ratio < asym.RATIO_HI * (1 - 1e-9):
        assert tag == "transition"


def test_regime_errors():
    with pytest.raises(DomainError):
        asym.classify_regime(0.1)
    with pytest.raises(DomainError):
        asym.classify_regime(-0.1, 0.01)
    with pytest.raises(DomainError):
        asym.classify_regime(0.1, 0.01, ratio_lo=5, ratio_hi=1)
