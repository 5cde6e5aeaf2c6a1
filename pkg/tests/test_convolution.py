import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levyk import (BoxTooSmall, KappaClass, LevyModel, ValidationError, Verdict,
                   check_condition_31, check_condition_C, check_condition_P, classify_F,
                   compound_poisson, conv_power, subadditivity_threshold, tail_mass,
                   truncated_measure, verify_lemma32)
from levyk.convolution import (FCase, FieldGrid, FReason, TruncatedMeasure,
                               pair_convolution_ratio)

KAPPA = KappaClass.poly_log(0.5, 0.0)


def model(beta, delta, m=1.0):
    return LevyModel.create(1, KAPPA, m, beta, delta)


# ----------------------------------------------------------------------------
# closed-form classification


def test_classify_relativistic_3d():
    assert classify_F(3, 1.0, 1.0, 2.25) == classify_F(3, 1.0, 1.0, (3 + 0.5 + 1) / 2)
    c = classify_F(3, 1.0, 1.0, 2.25)
    assert c.holds and c.case is FCase.C


def test_classify_lamperti():
    c = classify_F(1, 1.0, 1.0, 0.0)
    assert not c.holds and c.reason is FReason.CRITICAL_EXP
    assert c.verdict is Verdict.FAIL


def test_classify_polynomial_boundary():
    c = classify_F(2, 0.0, 1.0, 2.0)
    assert not c.holds
    assert classify_F(2, 0.0, 1.0, 2.5).case is FCase.A


def test_classify_cases():
    assert classify_F(1, 1.0, 0.5, 0.0).case is FCase.B
    assert classify_F(1, 1.0, 2.0, 5.0).reason is FReason.SUPEREXPONENTIAL
    assert classify_F(2, 1.0, 1.0, 1.5).reason is FReason.CRITICAL_EXP
    assert classify_F(2, 1.0, 1.0, 1.51).case is FCase.C
    with pytest.raises(ValidationError):
        classify_F(1, -1.0, 1.0, 0.0)
    with pytest.raises(ValidationError):
        classify_F(0, 1.0, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.sampled_from([0.0, 0.3, 1.0, 2.0]),
       st.floats(0.05, 3.0), st.floats(0.0, 6.0))
def test_classify_matches_rule(d, m, beta, delta):
    c = classify_F(d, m, beta, delta)
    want = ((m == 0 and delta > d) or (m > 0 and beta < 1)
            or (m > 0 and beta == 1 and delta > (d + 1) / 2))
    assert c.holds == want
    assert (c.case is None) == (not c.holds)


# ----------------------------------------------------------------------------
# numeric condition checks


def test_pair_convolution_against_direct_quadrature():
    mod = model(1.0, 2.0)
    f = lambda s: float(mod.profile(abs(s)))
    x = 6.0
    # region |y| > 1 and |x - y| > 1 split at the excluded intervals
    pieces = [(-60, -1), (1, x - 1), (x + 1, 70)]
    want = sum(integrate.quad(lambda y: f(x - y) * f(y), a, b, limit=400,
                              points=[1.0, x - 1.0] if a < 1.5 < b else None,
                              epsrel=1e-11)[0] for a, b in pieces) / f(x)
    assert pair_convolution_ratio(mod, x, 1.0, 1.0) == pytest.approx(want, rel=1e-7)


def test_condition_31():
    assert check_condition_31(model(1.0, 1.25)).verdict is Verdict.PASS
    rep = check_condition_31(model(1.0, 0.0))
    assert rep.verdict is Verdict.FAIL
    ratios = [g["ratio"] for g in rep.grid]
    assert ratios[-1] > 10 * ratios[0]
    assert check_condition_31(model(1.0, 2.0, m=0.0)).verdict is Verdict.PASS


def test_condition_31_near_critical_policy():
    rep = check_condition_31(model(1.0, 1.05), x_probes=np.geomspace(2, 40, 8))
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert "policy" in rep.diagnostics


def test_condition_C():
    assert check_condition_C(model(0.5, 0.0)).verdict is Verdict.PASS
    assert check_condition_C(model(1.0, 2.0)).verdict is Verdict.PASS
    rep = check_condition_C(model(2.0, 0.0))
    assert rep.verdict is Verdict.FAIL


def test_condition_C_superexponential_growth_rate():
    # ratio grows at least like exp(m (x^b - 2 (x/2 + 1)^b)) up to Psi factors
    mod = model(2.0, 0.0)
    xs = np.array([4.0, 6.0, 8.0])
    rep = check_condition_C(mod, x_probes=xs)
    log_ratio = np.log([g["ratio"] for g in rep.grid])
    predicted = xs ** 2 - 2 * (xs / 2 + 1) ** 2
    assert np.all(np.diff(log_ratio) > 0.5 * np.diff(predicted))


def test_condition_C_rejects_bad_probes():
    with pytest.raises(ValidationError):
        check_condition_C(model(0.5, 0.0), x_probes=[1.0])
    with pytest.raises(ValidationError):
        check_condition_C(model(0.5, 0.0), r_probes=[2.0])


def test_condition_P():
    assert check_condition_P(model(1.0, 0.0)).verdict is Verdict.PASS
    assert check_condition_P(model(0.5, 0.0)).verdict is Verdict.PASS
    with pytest.raises(ValidationError):
        check_condition_P(model(0.5, 0.0), s_probes=[4.0])


@pytest.mark.parametrize("beta, delta", [(0.5, 0.0), (0.7, 1.5), (1.0, 2.0), (1.0, 3.0)])
def test_C_implies_P(beta, delta):
    mod = model(beta, delta)
    assert check_condition_C(mod).verdict is Verdict.PASS
    assert check_condition_P(mod).verdict is Verdict.PASS


def test_subadditivity_threshold_sample():
    beta, eta = 0.5, 2.0
    s0 = subadditivity_threshold(beta, eta)
    u = np.geomspace(s0, 1e4 * s0, 100)
    uu, vv = np.meshgrid(u, u)
    gap = uu ** beta + vv ** beta - (uu + vv) ** beta - eta * np.log(np.minimum(uu, vv))
    assert gap.min() >= -1e-9 * s0 ** beta
    # the threshold is sharp on the diagonal
    below = 0.9 * s0
    assert 2 * below ** beta - (2 * below) ** beta - eta * math.log(below) < 0


def test_subadditivity_threshold_validation():
    assert subadditivity_threshold(0.5, 1e-3) == 1.0
    with pytest.raises(ValidationError):
        subadditivity_threshold(1.0, 2.0)


# ----------------------------------------------------------------------------
# grid measures


@pytest.fixture(scope="module")
def sub_measure():
    return truncated_measure(model(0.5, 0.0), 0.5, 0.02, 400.0)


def test_truncated_measure_mass(sub_measure):
    m = sub_measure
    assert m.total_exact == pytest.approx(tail_mass(m.model, 0.5), rel=1e-12)
    assert m.mass == pytest.approx(m.total_exact, rel=1e-6)
    # the only discrepancy is the mass beyond the last cell
    edge = m.grid.extent + 0.5 * m.grid.dx
    assert m.leak == pytest.approx(tail_mass(m.model, edge), rel=1e-5)
    inside = np.abs(m.grid.x) + 0.5 * m.grid.dx <= 0.5
    assert np.all(m.weights[inside] == 0.0)
    assert np.array_equal(m.weights, m.weights[::-1])


def test_truncated_measure_validation():
    with pytest.raises(ValidationError):
        truncated_measure(model(0.5, 0.0), 0.5, 0.02, 0.3)
    m2 = LevyModel.create(2, KAPPA, 1.0, 1.0, 0.0)
    with pytest.raises(ValidationError):
        truncated_measure(m2, 0.5, 0.02, 5.0)


def test_conv_power_identity(sub_measure):
    p = conv_power(sub_measure, 1)
    assert np.array_equal(p.values, sub_measure.weights)


def test_conv_power_bernoulli():
    grid = FieldGrid(1.0, 3)
    w = np.zeros(7)
    w[3 - 2] = w[3 + 2] = 0.5
    meas = TruncatedMeasure(model(0.5, 0.0), 1.0, grid, w, 1.0)
    p = conv_power(meas, 2)
    x = p.grid.x
    nz = {float(a): float(v) for a, v in zip(x, p.values) if v > 0}
    assert nz == pytest.approx({-4.0: 0.25, 0.0: 0.5, 4.0: 0.25})


@pytest.mark.parametrize("n", [2, 3, 4])
def test_conv_power_mass(sub_measure, n):
    p = conv_power(sub_measure, n)
    assert p.mass == pytest.approx(sub_measure.total_exact ** n, rel=1e-4)
    assert np.all(p.values >= 0.0)
    assert np.allclose(p.values, p.values[::-1], rtol=1e-12, atol=1e-300)


def test_conv_power_box_too_small():
    meas = truncated_measure(model(0.5, 0.0), 0.5, 0.05, 3.0)
    with pytest.raises(BoxTooSmall):
        conv_power(meas, 3, keep_support=False)


def test_compound_poisson_masses(sub_measure):
    cp = compound_poisson(sub_measure, 0.1)
    assert cp.total == pytest.approx(1.0, abs=1e-6)
    assert cp.leftover <= 1e-8
    assert cp.atom == pytest.approx(math.exp(-0.1 * sub_measure.total_exact), rel=1e-12)


def test_compound_poisson_unit_rate(sub_measure):
    t = 1.0 / sub_measure.total_exact
    cp = compound_poisson(sub_measure, t)
    assert cp.atom == pytest.approx(math.exp(-1.0), abs=1e-9)
    assert cp.total == pytest.approx(1.0, abs=1e-6)


def test_compound_poisson_small_time(sub_measure):
    cp = compound_poisson(sub_measure, 1e-6)
    assert cp.atom > 1 - 1e-4


def test_compound_poisson_first_term(sub_measure):
    # with one term the grid part is e^{-t |nu|} t nu
    t = 0.05
    cp = compound_poisson(sub_measure, t, n_max=1)
    want = math.exp(-t * sub_measure.total_exact) * t * sub_measure.weights
    assert np.allclose(cp.values, want, rtol=1e-13)
    with pytest.raises(ValidationError):
        compound_poisson(sub_measure, 0.0)


def test_lemma32_subexponential():
    # the subexponential ratio saturates only for |x| in the hundreds
    xs = np.geomspace(4.0, 1000.0, 10)
    meas = truncated_measure(model(0.5, 0.0), 1.0, 0.25, 1500.0)
    rep = verify_lemma32(meas, 3, xs)
    assert rep.verdict is Verdict.PASS
    roots = [e["root"] for e in rep.diagnostics["per_n"]]
    assert max(roots) / min(roots) < 1.5
    # n = 1 reduces to the pair-convolution integrand with r_in = r
    n1 = rep.diagnostics["per_n"][0]["sup"]
    direct = max(pair_convolution_ratio(meas.model, x, 1.0, 1.0) for x in xs)
    assert n1 == pytest.approx(direct, rel=0.02)


def test_lemma32_superexponential():
    meas = truncated_measure(model(2.0, 0.0), 1.0, 0.05, 30.0)
    rep = verify_lemma32(meas, 2, np.geomspace(3.0, 12.0, 8))
    assert rep.verdict is Verdict.FAIL
