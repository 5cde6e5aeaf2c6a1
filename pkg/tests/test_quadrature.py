import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import fresnel

from levyk.errors import NumericFailure
from levyk.quadrature import (decade_edges, euler_limit, gauss_legendre, log_quad,
                              oscillatory_decades, oscillatory_tail)


def test_log_quad_endpoint_singularity():
    # int_0^1 s^-0.9 ds = 10, reached through a tiny lower limit
    val = log_quad(lambda s: s ** -0.9, 1e-300, 1.0, rel_tol=1e-12)
    assert val == pytest.approx(10.0 * (1 - (1e-300) ** 0.1), rel=1e-10)


def test_log_quad_infinite_upper_limit():
    val = log_quad(lambda s: math.exp(-s + 2.0 * math.log(s)), 1e-8, math.inf, rel_tol=1e-12)
    assert val == pytest.approx(2.0, rel=1e-9)


def test_log_quad_breakpoints():
    f = lambda s: 1.0 if s < 3.0 else 0.0
    assert log_quad(f, 1.0, 5.0, points=[3.0]) == pytest.approx(2.0, rel=1e-12)


def test_log_quad_rejects_bad_interval():
    assert log_quad(lambda s: s, 2.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        log_quad(lambda s: s, 0.0, 1.0)


def test_decade_edges():
    assert decade_edges(1.0, 250.0) == [1.0, 10.0, 100.0, 250.0]


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(8)
    assert np.dot(w, x ** 14) == pytest.approx(2.0 / 15.0, rel=1e-13)


def test_euler_limit_alternating_series():
    # partial sums of log 2 = 1 - 1/2 + 1/3 - ...
    k = np.arange(1, 31)
    sums = np.cumsum((-1.0) ** (k + 1) / k)
    val, err = euler_limit(sums)
    assert val == pytest.approx(math.log(2.0), abs=1e-10)
    assert err < 1e-8


@pytest.mark.parametrize("omega", [3.0, 250.0])
def test_oscillatory_decades(omega):
    w = lambda s: s ** -0.5
    # s = pi u^2 / (2 omega) turns the integral into Fresnel's C
    cf = lambda s: fresnel(math.sqrt(2 * omega * s / math.pi))[1]
    want = math.sqrt(2 * math.pi / omega) * (cf(40.0) - cf(0.01))
    got = oscillatory_decades(w, 0.01, 40.0, omega)
    assert got == pytest.approx(want, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("kind", ["cos", "sin"])
def test_oscillatory_tail(kind):
    omega = 7.0
    w = lambda s: np.asarray(s, dtype=float) ** -1.5
    trig = mp.cos if kind == "cos" else mp.sin
    want = float(mp.quadosc(lambda s: s ** -1.5 * trig(omega * s), [2, mp.inf],
                            omega=omega))
    got = oscillatory_tail(w, 2.0, omega, kind=kind)
    assert got == pytest.approx(want, rel=1e-8)


def test_oscillatory_tail_reports_nonconvergence():
    # a growing weight has no alternating-series limit
    w = lambda s: np.asarray(s, dtype=float) ** 0.5
    with pytest.raises(NumericFailure):
        oscillatory_tail(w, 1.0, 3.0, n_half=8)
