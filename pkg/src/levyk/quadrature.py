"""Quadrature helpers: log-variable adaptive integration, decade-split
oscillatory integrals and an alternating-series tail integrator."""

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import NumericFailure

# Defaults for the adaptive Gauss-Kronrod driver.
ABS_TOL = 1e-10
REL_TOL = 1e-8


def _checked_quad(fun, lo, hi, rel_tol, what, scale=None, **kw):
    kw.setdefault("limit", 400)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=rel_tol, **kw)
    if not math.isfinite(val):
        raise NumericFailure(f"{what}: non-finite value", {"lo": lo, "hi": hi})
    # QUADPACK is pessimistic about roundoff; accept anything within a
    # loose multiple of the requested tolerance and fail loudly otherwise.
    ref = abs(val) if scale is None else max(abs(val), scale)
    if caught and err > max(1e3 * rel_tol * ref, 1e-300):
        raise NumericFailure(
            f"{what}: tolerance not met",
            {"lo": lo, "hi": hi, "value": val, "error": err,
             "warning": str(caught[-1].message)},
        )
    return val, err


def log_quad(fun, a, b, rel_tol=1e-10, points=None, what="integral"):
    """Integrate ``fun(s)`` over ``[a, b]`` with the substitution s = e^u.

    Endpoint singularities of power type become exponentially decaying
    in u. ``b`` may be ``inf`` when the integrand decays at least like a
    power. Breakpoints ``points`` (in s) are honoured.
    """
    if not (0.0 < a < b):
        if a == b:
            return 0.0
        raise ValueError("log_quad needs 0 < a < b")
    def g(u):
        if u > 700.0:
            return 0.0
        s = math.exp(u)
        return fun(s) * s

    ua = math.log(a)
    ub = math.inf if math.isinf(b) else math.log(b)
    cuts = [ua]
    if points is not None:
        cuts += sorted(math.log(p) for p in points if a < p < b)
    cuts.append(ub)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # Split long finite stretches into unit-ish chunks so the adaptive
        # driver never has to find a narrow feature on a huge interval.
        if math.isinf(hi):
            total += _checked_quad(g, lo, hi, rel_tol, what)[0]
            continue
        n = max(1, int(math.ceil((hi - lo) / 8.0)))
        edges = np.linspace(lo, hi, n + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            total += _checked_quad(g, float(e0), float(e1), rel_tol, what)[0]
    return total


def decade_edges(a, b, ratio=10.0):
    edges = [a]
    while edges[-1] * ratio < b:
        edges.append(edges[-1] * ratio)
    edges.append(b)
    return edges


def oscillatory_decades(w, a, b, omega, kind="cos", rel_tol=1e-11, scale=None):
    """Integrate ``w(s) * cos(omega s)`` (or sin) over finite ``[a, b]``.

    The interval is split into geometric decades and each handed to the
    Clenshaw-Curtis based weighted rule. A single long interval loses
    accuracy once it spans many decades of s at high frequency. ``scale``
    (typically the integral of |w|) sets the reference for the error check,
    since the oscillatory value itself may cancel to almost nothing.
    """
    if b <= a:
        return 0.0
    total = 0.0
    for lo, hi in zip(*(lambda e: (e[:-1], e[1:]))(decade_edges(a, b))):
        v, _ = _checked_quad(w, lo, hi, rel_tol, "oscillatory decade",
                             scale=scale, weight=kind, wvar=omega, limit=2000)
        total += v
    return total


@lru_cache(maxsize=8)
def gauss_legendre(n):
    x, wt = np.polynomial.legendre.leggauss(n)
    return x, wt


def euler_limit(partial_sums):
    """Limit of an alternating sequence of partial sums.

    Repeated pairwise averaging; returns the value and the difference
    between the last two levels as an error indicator.
    """
    s = np.asarray(partial_sums, dtype=float)
    prev = s[-1]
    while s.size > 1:
        prev = s[-1]
        s = 0.5 * (s[:-1] + s[1:])
    return float(s[0]), abs(float(s[0]) - float(prev))


def oscillatory_tail(w, a, omega, kind="cos", n_half=64, n_nodes=24,
                     rel_tol=1e-9):
    """Integrate ``w(s) * cos(omega s)`` (or sin) over ``[a, inf)``.

    ``w`` must be vectorised, smooth and monotonically decaying on the
    range. The range is split at zeros of the trigonometric factor, each
    half-period is integrated by Gauss-Legendre, and the alternating
    series of half-period integrals is summed with pairwise averaging.
    Callers should start at ``a`` where ``w`` changes little over one
    period.
    """
    half = math.pi / omega
    shift = 0.5 if kind == "cos" else 0.0
    k0 = math.floor(a / half - shift) + 1
    x, wt = gauss_legendre(n_nodes)
    # On [z_k, z_k + half] with z_k the k-th zero, the trigonometric
    # factor equals sign_k * sin(omega * tau), tau measured from z_k.
    # Working with tau keeps the phase exact when omega * s is huge.
    if kind == "cos":
        sign = lambda k: -1.0 if k % 2 == 0 else 1.0
    else:
        sign = lambda k: 1.0 if k % 2 == 0 else -1.0

    z_prev = (k0 - 1 + shift) * half
    head = 0.0
    if a < z_prev + half:
        lo_tau = a - z_prev
        tau = 0.5 * (half - lo_tau) * x + 0.5 * (half + lo_tau)
        head = sign(k0 - 1) * 0.5 * (half - lo_tau) * float(
            np.dot(wt, w(z_prev + tau) * np.sin(omega * tau)))
    ks = k0 + np.arange(n_half)
    tau = 0.5 * half * (x + 1.0)
    s = (ks + shift)[:, None] * half + tau[None, :]
    vals = w(s.ravel()).reshape(s.shape) * np.sin(omega * tau)[None, :]
    signs = np.where(ks % 2 == 0, sign(0), -sign(0))
    terms = signs * 0.5 * half * (vals @ wt)
    sums = head + np.cumsum(terms)
    val, err = euler_limit(sums)
    scale = max(abs(val), abs(head), np.max(np.abs(terms)))
    if not math.isfinite(val) or err > rel_tol * scale + 1e-300:
        raise NumericFailure(
            "alternating tail series did not settle",
            {"a": a, "omega": omega, "value": val, "error": err,
             "partial_sums": sums[-4:].tolist()},
        )
    return val
