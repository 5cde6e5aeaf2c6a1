import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyk import (KappaClass, LevyModel, ProfileSpec, ValidationError, exponent_table,
                   levy_density, profile_eval, small_jump_second_moment, tail_mass)
from levyk.profiles import sphere_area


def test_profile_at_one_is_kappa():
    p = ProfileSpec(KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    assert profile_eval(p, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_profile_tail_substitution():
    p = ProfileSpec(KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    assert profile_eval(p, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_high_intensity_value(d):
    p = ProfileSpec(KappaClass.high_intensity(), 0.0, 1.0, d + 1.0, d=d)
    assert p.c == pytest.approx(math.log(2.0) ** -2)
    want = 0.5 ** (-d - 2) * math.log(3.0) ** -2
    assert profile_eval(p, 0.5) == pytest.approx(want, rel=1e-13)


def test_profile_rejects_nonpositive_argument():
    p = ProfileSpec(KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    with pytest.raises(ValidationError):
        profile_eval(p, 0.0)
    with pytest.raises(ValidationError):
        profile_eval(p, -1.0)


@pytest.mark.parametrize("kw", [
    dict(m=0.0, beta=1.0, delta=1.0),          # m = 0 needs delta > d
    dict(m=-1.0, beta=1.0, delta=0.0),
    dict(m=1.0, beta=0.0, delta=0.0),
    dict(m=1.0, beta=1.0, delta=-0.5),
    dict(m=1.0, beta=1.0, delta=0.0, c=3.0),   # c above kappa(1) e^m
    dict(m=1.0, beta=1.0, delta=0.0, c=0.0),
])
def test_profile_admissibility(kw):
    with pytest.raises(ValidationError):
        ProfileSpec(KappaClass.poly_log(0.5, 0.0), **kw)


@pytest.mark.parametrize("a1, a2", [(0.0, 0.0), (2.5, 0.0), (2.0, 0.0)])
def test_kappa_admissibility(a1, a2):
    with pytest.raises(ValidationError):
        KappaClass.poly_log(a1, a2)


def test_levy_density_symmetry_and_norm():
    m1 = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    assert levy_density(m1, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-13)
    assert levy_density(m1, 0.3) == levy_density(m1, -0.3)
    m2 = LevyModel.create(2, KappaClass.poly_log(1.0, 0.0), 1.0, 1.0, 0.0)
    assert levy_density(m2, [3.0, 4.0]) == profile_eval(m2.profile, 5.0)
    assert levy_density(m2, [3.0, 4.0]) == levy_density(m2, [-3.0, -4.0])
    with pytest.raises(ValidationError):
        levy_density(m1, 0.0)
    with pytest.raises(ValidationError):
        levy_density(m2, [1.0])


def test_tail_mass_closed_form():
    model = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0, c=math.e)
    assert tail_mass(model, 1.0) == pytest.approx(2.0, rel=1e-9)


def test_tail_mass_against_mpmath():
    model = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 0.5, 0.0)
    c = model.profile.c
    # 2 int_0.3^1 s^-1.5 ds + 2 c int_1^inf e^-sqrt(s) ds
    oracle = 2 * (mp.mpf(0.3) ** -0.5 - 1) / 0.5 \
        + 2 * c * mp.quad(lambda s: mp.exp(-mp.sqrt(s)), [1, 10, mp.inf])
    assert tail_mass(model, 0.3) == pytest.approx(float(oracle), rel=1e-8)


def test_tail_mass_monotone_and_vanishing():
    model = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    assert tail_mass(model, 0.01) > tail_mass(model, 0.1)
    assert tail_mass(model, 1e3) < tail_mass(model, 1.0)
    with pytest.raises(ValidationError):
        tail_mass(model, 0.0)


@pytest.mark.parametrize("a1", [0.3, 0.5, 1.0, 1.5, 1.9])
def test_second_moment_closed_form(a1):
    model = LevyModel.create(1, KappaClass.poly_log(a1, 0.0), 1.0, 1.0, 0.0)
    assert small_jump_second_moment(model, 1.0) == pytest.approx(2.0 / (2.0 - a1), rel=1e-8)


def test_second_moment_vanishes_and_rejects():
    model = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)
    assert small_jump_second_moment(model, 1e-6) < 1e-8
    with pytest.raises(ValidationError):
        small_jump_second_moment(model, 1.5)


def test_high_intensity_second_moment_finite():
    model = LevyModel.create(1, KappaClass.high_intensity(), 1.0, 1.0, 0.0)
    # s^2 f(s) = 1/(s log(1+1/s)^2); substitute s = e^-u to reach the endpoint
    oracle = 2 * mp.quad(lambda u: 1 / mp.log1p(mp.exp(u)) ** 2, [0, 10, 100, mp.inf])
    val = small_jump_second_moment(model, 1.0)
    assert math.isfinite(val)
    assert val == pytest.approx(float(oracle), rel=1e-7)


@pytest.mark.parametrize("d", [2, 3])
def test_tail_mass_higher_dimension(d):
    model = LevyModel.create(d, KappaClass.poly_log(1.0, 0.0), 1.0, 1.0, 0.0, c=math.e)
    # sphere_area(d) * e * int_1^inf e^-s s^{d-1} ds
    oracle = sphere_area(d) * math.e * float(mp.gammainc(d, 1))
    assert tail_mass(model, 1.0) == pytest.approx(oracle, rel=1e-8)


def test_sphere_area():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_negative_log_exponent_is_monotonized():
    from scipy.optimize import brentq
    kappa = KappaClass.poly_log(1.0, -3.0)
    p = ProfileSpec(kappa, 1.0, 1.0, 0.0)
    raw = lambda r: r ** -2.0 * math.log1p(1.0 / r) ** -3.0
    # raw kappa turns upward where d/dr log raw = 0
    r_star = brentq(lambda r: -2.0 + 3.0 / ((1 + r) * math.log1p(1 / r)), 1e-3, 1.0)
    s = np.geomspace(1e-8, 1.0, 2000)
    assert np.all(np.diff(p(s)) <= 0.0)
    assert profile_eval(p, 0.5 * r_star) == pytest.approx(raw(0.5 * r_star), rel=1e-12)
    assert profile_eval(p, 0.95) == pytest.approx(raw(r_star), rel=1e-9)
    assert raw(0.95) > raw(r_star)


def test_model_roundtrip_dict():
    model = LevyModel.create(2, KappaClass.poly_log(0.7, 0.5), 2.0, 0.8, 1.0, b=[0.1, -0.2])
    again = LevyModel.from_dict(model.to_dict())
    assert again == model


kappas = st.one_of(
    st.just(KappaClass.pure_log()),
    st.just(KappaClass.high_intensity()),
    st.builds(KappaClass.poly_log, st.floats(0.05, 1.95), st.floats(-3.0, 3.0)),
)


@st.composite
def profiles(draw):
    d = draw(st.integers(1, 3))
    kappa = draw(kappas)
    m = draw(st.sampled_from([0.0, 0.5, 1.0, 3.0]))
    beta = draw(st.floats(0.1, 3.0))
    delta = draw(st.floats(d + 0.1, d + 3.0)) if m == 0.0 else draw(st.floats(0.0, 4.0))
    shrink = draw(st.floats(0.05, 1.0))
    c_max = kappa.value(1.0, d) * math.exp(m)
    return ProfileSpec(kappa, m, beta, delta, shrink * c_max, d)


@settings(max_examples=80, deadline=None)
@given(profiles(), st.floats(1e-6, 50.0), st.floats(1.0, 10.0))
def test_profile_monotone_positive(p, s, factor):
    a, b = float(p(s)), float(p(s * factor))
    # positive unless the exact tail value lies below the double range
    log_tail = math.log(p.c) - p.m * s ** p.beta - p.delta * math.log(s)
    assert a > 0.0 or (s > 1.0 and log_tail < -745.0)
    assert b <= a * (1.0 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(profiles())
def test_junction_continuity_default_c(p):
    q = ProfileSpec(p.kappa, p.m, p.beta, p.delta, None, p.d)
    assert float(q(1.0 + 1e-12)) == pytest.approx(float(q(1.0)), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.95), st.floats(-3.0, 3.0), st.integers(1, 3))
def test_poly_log_doubling(a1, a2, d):
    p = ProfileSpec(KappaClass.poly_log(a1, a2), 1.0, 1.0, 0.0, d=d)
    r = np.geomspace(1e-12, 0.25, 200)
    ratio = p(r) / p(2 * r)
    assert np.all(np.isfinite(ratio))
    assert ratio.max() < 2.0 ** (d + 2) * 2.0 ** abs(a2)


@pytest.mark.parametrize("kappa", [KappaClass.poly_log(0.5, 0.0), KappaClass.pure_log(),
                                   KappaClass.high_intensity()])
def test_tail_mass_bounded_by_psi(kappa):
    model = LevyModel.create(1, kappa, 1.0, 1.0, 0.0)
    table = exponent_table(model)
    rs = np.geomspace(1e-6, 1.0, 25)
    ratio = np.array([tail_mass(model, r) for r in rs]) / table.psi_at(1.0 / rs)
    assert np.all(np.isfinite(ratio))
    assert ratio.max() < 10.0
