"""Characteristic exponent, its radial maximal function and time scale.

For a symmetric radial Levy density g(x) = f(|x|) the real part of the
exponent along any direction equals 2 * int_0^inf (1 - cos(rho z)) g1(z) dz
where g1 is the one-dimensional marginal of g (g1 = f when d = 1).
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import gamma, jv

from .errors import NumericFailure, RangeError, ValidationError
from .profiles import (LevyModel, _tail_cutoff, kappa_moment, radial_integral,
                       small_jump_second_moment, sphere_area)
from .quadrature import log_quad, oscillatory_decades, oscillatory_tail
from .reports import ConditionReport, Verdict, growth_verdict

# Below rho * s = U_SMALL the factor 1 - cos is replaced by its quadratic
# Taylor term (relative error u^2 / 12).
U_SMALL = 1e-4
# Direct quadrature of 2 sin^2(rho s / 2) w(s) up to rho * s = K_DIRECT,
# the split form int w - int w cos beyond.
K_DIRECT = 8.0 * math.pi
# Inner radius excluded from the marginal tables used when d >= 2.
MARGINAL_EPS = 1e-14


def workers():
    """Worker processes allowed by LEVYK_THREADS (default: one per CPU)."""
    env = os.environ.get("LEVYK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return max(1, os.cpu_count() or 1)


# ----------------------------------------------------------------------------
# One-dimensional cosine deficit
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class _Piece:
    a: float
    b: float          # may be inf
    w: object         # vectorised callable on [a, b]
    mass: object = None   # callable (lo, hi) -> int_lo^hi w, optional
    scalar: object = None  # fast scalar version of w, optional


def _deficit_piece(piece, rho):
    """int over the piece of (1 - cos(rho s)) w(s) ds."""
    a, b, w = piece.a, piece.b, piece.w
    sc = K_DIRECT / rho
    total = 0.0
    scalar = piece.scalar or (lambda s: float(w(s)))
    if sc > a:
        hi = min(b, sc)
        f = lambda s: 2.0 * math.sin(0.5 * rho * s) ** 2 * scalar(s)
        total += log_quad(f, a, hi, rel_tol=1e-11, what="exponent near part")
    if sc < b:
        lo = max(a, sc)
        if piece.mass is not None:
            mass = piece.mass(lo, b)
        else:
            mass = log_quad(scalar, lo, b, rel_tol=1e-11, what="exponent mass")
        if math.isinf(b):
            osc = oscillatory_tail(w, lo, rho)
        else:
            osc = oscillatory_decades(scalar, lo, b, rho, scale=mass)
        total += mass - osc
    return total


def _cosine_deficit(pieces, quad_moment, rho):
    """2 * int_0^inf (1 - cos(rho z)) w(z) dz from pieces covering
    [z0, inf) and ``quad_moment(z0)`` = int_0^z0 z^2 w(z) dz."""
    if rho == 0.0:
        return 0.0
    z0 = pieces[0].a
    total = 0.5 * rho * rho * quad_moment(z0)
    for piece in pieces:
        total += _deficit_piece(piece, rho)
    return 2.0 * total


def _radial_pieces(model, rho, r_max=math.inf):
    """Pieces of the profile itself (d = 1), truncated to (0, r_max]."""
    p = model.profile
    z0 = min(U_SMALL / rho, 1.0, r_max)
    pieces = []
    hi = min(1.0, r_max)
    if hi > z0:
        pieces.append(_Piece(z0, hi, p, None, p.scalar))
    if r_max > 1.0:
        end = min(r_max, _tail_cutoff(p, 1.0))
        mass = lambda lo, hi_: radial_integral(model, 0, lo, hi_)
        if end > max(1.0, z0):
            pieces.append(_Piece(max(1.0, z0), end, p, mass, p.scalar))
    return pieces, z0


def _re_phi_1d(model, rho, r_max=math.inf):
    p = model.profile
    pieces, z0 = _radial_pieces(model, rho, r_max)
    if z0 <= 1.0:
        moment = lambda z: kappa_moment(p, 2.0, z)
    else:
        moment = lambda z: radial_integral(model, 2, 0.0, z)
    if not pieces:
        return rho * rho * moment(z0)
    return _cosine_deficit(pieces, moment, rho)


# ----------------------------------------------------------------------------
# Marginals for d >= 2
# ----------------------------------------------------------------------------

class Marginal:
    """One-dimensional marginal of f(|y|) 1{|y| > eps} in R^d, tabulated.

    g1(z) = omega_{d-2} int_{s > max(z, eps)} f(s) s (s^2 - z^2)^((d-3)/2) ds.
    Two cubic splines in log-log coordinates, split at z = 1 where the
    profile has its junction. For m = 0 the marginal is an exact power of
    z beyond 1.
    """

    def __init__(self, model, eps=MARGINAL_EPS, per_decade=48):
        if model.d < 2:
            raise ValidationError("marginal tables are for d >= 2", "d")
        self.model = model
        self.eps = eps
        p = model.profile
        d = model.d
        self.coef = sphere_area(d - 1)
        zlo = eps * 1e-2
        n_in = int(per_decade * math.log10(1.0 / zlo)) + 2
        z_in = np.geomspace(zlo, 1.0, n_in)
        self.spline_in = CubicSpline(np.log(z_in),
                                     np.log([self._direct(z) for z in z_in]))
        self.zlo = zlo
        self.g_floor = math.exp(float(self.spline_in(math.log(zlo))))
        if p.m == 0.0:
            # For z >= 1 every s >= z sits on the power tail c s^-delta.
            k = lambda w: math.cosh(w) ** (1.0 - p.delta) * math.sinh(w) ** (d - 2)
            w_end = 80.0 / (p.delta - d + 1.0)
            const, _ = integrate.quad(k, 0.0, w_end, limit=200, epsabs=0.0,
                                      epsrel=1e-12)
            self.power = (d - 1.0 - p.delta, self.coef * p.c * const)
            self.z_cut = math.inf
            self.spline_out = None
        else:
            self.power = None
            self.z_cut = _tail_cutoff(p, 1.0)
            n_out = max(64, int(per_decade * 4 * math.log10(self.z_cut)) + 2)
            z_out = np.geomspace(1.0, self.z_cut, n_out)
            self.spline_out = CubicSpline(
                np.log(z_out), np.array([self._log_direct(z) for z in z_out]))

    def _integrand(self, z, lo):
        p = self.model.profile
        d = self.model.d
        if lo > z:
            g = lambda s: p.scalar(s) * s * (s * s - z * z) ** ((d - 3) / 2.0)
            pts = [1.0] if lo < 1.0 else None
            end = _tail_cutoff(p, 1.0)
            return self.coef * log_quad(g, lo, end, points=pts,
                                        rel_tol=1e-10, what="marginal")
        # s = z cosh(w) removes the endpoint singularity at s = z.
        h = lambda w: (p.scalar(z * math.cosh(w)) * math.sinh(w) ** (d - 2)
                       * math.cosh(w))
        pts = [math.acosh(1.0 / z)] if z < 1.0 else []
        if p.m > 0:
            w_end = math.acosh(max(_tail_cutoff(p, z), 2.0 * z) / z)
        else:
            # Integrand decays like exp(-(delta - d + 1) w) once z cosh(w) > 1.
            w_end = (pts[0] if pts else 0.0) + 80.0 / (p.delta - d + 1.0)
        edges = [0.0] + pts + [w_end]
        total = 0.0
        for w0, w1 in zip(edges[:-1], edges[1:]):
            v, _ = integrate.quad(h, w0, w1, limit=400, epsabs=0.0, epsrel=1e-11)
            total += v
        return self.coef * z ** (d - 1) * total

    def _direct(self, z):
        return self._integrand(z, self.eps)

    def _log_direct(self, z):
        v = self._direct(z)
        return math.log(v) if v > 0.0 else -745.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        lz = np.log(np.maximum(z, 1e-300))
        inner = z <= 1.0
        tiny = z < self.zlo
        out[inner] = np.exp(self.spline_in(lz[inner]))
        out[tiny] = self.g_floor
        outer = ~inner
        if self.power is not None:
            e, k = self.power
            out[outer] = k * z[outer] ** e
        else:
            vals = np.exp(self.spline_out(np.minimum(lz[outer], math.log(self.z_cut))))
            vals[z[outer] > self.z_cut] = 0.0
            out[outer] = vals
        return out if out.ndim else float(out)

    def second_moment(self, z):
        """int_0^z u^2 g1(u) du (z small)."""
        f = lambda u: u * u * float(self(u))
        head = self.g_floor * min(z, self.zlo) ** 3 / 3.0
        if z <= self.zlo:
            return head
        return head + log_quad(f, self.zlo, z, rel_tol=1e-10, what="marginal moment")


@lru_cache(maxsize=32)
def marginal(model):
    return Marginal(model)


def _re_phi_marginal(model, rho):
    g1 = marginal(model)
    d = model.d
    z0 = min(U_SMALL / rho, 1.0)
    if z0 < g1.eps * 10.0:
        raise RangeError(f"rho = {rho:g} exceeds the marginal table reach")
    pieces = [_Piece(z0, 1.0, g1)]
    if g1.power is not None:
        e, k = g1.power
        mass = lambda lo, hi: k * lo ** (e + 1.0) / -(e + 1.0)
        pieces.append(_Piece(1.0, math.inf, g1, mass))
    else:
        pieces.append(_Piece(1.0, g1.z_cut, g1))
    moment = g1.second_moment
    inner = rho * rho / (2.0 * d) * small_jump_second_moment(model, g1.eps)
    return inner + _cosine_deficit(pieces, moment, rho)


# ----------------------------------------------------------------------------
# Public exponent operations
# ----------------------------------------------------------------------------

def re_phi(model, rho):
    """Re Phi at any xi with |xi| = rho."""
    rho = float(rho)
    if rho < 0.0 or not math.isfinite(rho):
        raise ValidationError("rho must be finite and >= 0", "rho")
    if rho == 0.0:
        return 0.0
    try:
        if model.d == 1:
            return _re_phi_1d(model, rho)
        return _re_phi_marginal(model, rho)
    except NumericFailure as exc:
        exc.diagnostics.setdefault("rho", rho)
        raise


def small_jump_exponent(model, r, rho):
    """Exponent of the Levy measure restricted to the ball of radius r
    (d = 1 only)."""
    if model.d != 1:
        raise ValidationError("small-jump exponent is implemented for d = 1", "d")
    if rho == 0.0:
        return 0.0
    return _re_phi_1d(model, float(rho), r_max=float(r))


def sphere_cos_average(d, u):
    """A_d(u) / omega_{d-1}: the sphere average of 1 - cos(u e1 . theta),
    via the closed Bessel form."""
    u = np.asarray(u, dtype=float)
    if d == 1:
        return 1.0 - np.cos(u)
    nu = d / 2.0 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = gamma(d / 2.0) * (2.0 / u) ** nu * jv(nu, u)
    lam = np.where(u < 1e-8, 1.0 - u * u / (2.0 * d), lam)
    return 1.0 - lam


def sphere_cos_average_quad(d, u):
    """Same average computed by colatitude quadrature (independent route)."""
    if d == 1:
        return 1.0 - math.cos(u)
    wgt = lambda th: math.sin(th) ** (d - 2)
    norm, _ = integrate.quad(wgt, 0.0, math.pi)
    f = lambda th: (1.0 - math.cos(u * math.cos(th))) * wgt(th)
    v, _ = integrate.quad(f, 0.0, math.pi, limit=400, epsabs=0.0, epsrel=1e-12)
    return v / norm


def _re_phi_task(args):
    model, rho = args
    return re_phi(model, rho)


@dataclass(frozen=True)
class ExponentTable:
    radii: np.ndarray
    re_phi: np.ndarray
    psi: np.ndarray
    model: LevyModel = field(compare=False)

    def __post_init__(self):
        lr = np.log(self.radii)
        lp = np.log(np.maximum(self.re_phi, 1e-300))
        object.__setattr__(self, "_spline", CubicSpline(lr, lp))
        object.__setattr__(self, "_lr", lr)
        object.__setattr__(self, "_lpsi", np.log(np.maximum(self.psi, 1e-300)))

    @property
    def rho_min(self):
        return float(self.radii[0])

    @property
    def rho_max(self):
        return float(self.radii[-1])

    def phi(self, rho):
        """Smooth interpolant of Re Phi; power-law extrapolation outside."""
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        pos = rho > 0.0
        lr = np.log(rho[pos])
        lo, hi = self._lr[0], self._lr[-1]
        val = self._spline(np.clip(lr, lo, hi))
        s_lo = self._spline(lo, 1)
        s_hi = self._spline(hi, 1)
        val = np.where(lr < lo, self._spline(lo) + s_lo * (lr - lo), val)
        val = np.where(lr > hi, self._spline(hi) + s_hi * (lr - hi), val)
        out[pos] = np.exp(val)
        return out if out.ndim else float(out)

    def psi_at(self, r):
        """Psi at r by log-log linear interpolation of the table."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self.radii[0] * (1 - 1e-12)) or np.any(r > self.radii[-1] * (1 + 1e-12)):
            raise RangeError("radius outside the exponent table; extend rho range")
        return np.exp(np.interp(np.log(r), self._lr, self._lpsi))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("rho,re_phi,psi\n")
            for r, v, s in zip(self.radii, self.re_phi, self.psi):
                fh.write(f"{r:.17g},{v:.17g},{s:.17g}\n")


def build_psi(model, rho_min, rho_max, n_points=2048):
    """Re Phi on a log grid and its running maximum."""
    if not (0.0 < rho_min < rho_max) or int(n_points) < 2:
        raise ValidationError("need 0 < rho_min < rho_max and n_points >= 2")
    radii = np.geomspace(rho_min, rho_max, int(n_points))
    nw = min(workers(), len(radii))
    if nw > 1:
        with ProcessPoolExecutor(nw) as pool:
            vals = list(pool.map(_re_phi_task, [(model, float(r)) for r in radii],
                                 chunksize=16))
    else:
        vals = [re_phi(model, float(r)) for r in radii]
    vals = np.array(vals)
    psi = np.maximum.accumulate(vals)
    return ExponentTable(radii, vals, psi, model)


@lru_cache(maxsize=64)
def exponent_table(model, rho_min=1e-3, rho_max=1e8, n_points=1024):
    """Memoised table builder."""
    return build_psi(model, rho_min, rho_max, n_points)


def psi_inverse(table, s):
    """Largest r with Psi(r) = s on the log-log interpolated table."""
    s = float(s)
    psi = table.psi
    if not (psi[0] <= s <= psi[-1]):
        raise RangeError(
            f"value {s:g} outside table range [{psi[0]:g}, {psi[-1]:g}]; "
            "extend the rho range of the table")
    idx = int(np.searchsorted(psi, s, side="right"))
    if idx >= len(psi):
        return float(table.radii[-1])
    lo = idx - 1
    if lo < 0:
        return float(table.radii[0])
    l0, l1 = table._lpsi[lo], table._lpsi[idx]
    frac = (math.log(s) - l0) / (l1 - l0)
    return float(math.exp(table._lr[lo] + frac * (table._lr[idx] - table._lr[lo])))


@dataclass(frozen=True)
class TimeScale:
    t: float
    h: float
    psi_inv: float


def h_of_t(table, t):
    if not t > 0.0:
        raise ValidationError("t must be > 0", "t")
    inv = psi_inverse(table, 1.0 / t)
    return TimeScale(float(t), 1.0 / inv, inv)


def drift_correction(model, r):
    """b_r. The compensator integral vanishes for symmetric densities."""
    if not r > 0.0:
        raise ValidationError("r must be > 0", "r")
    return np.array(model.b, dtype=float)


# ----------------------------------------------------------------------------
# Condition checkers
# ----------------------------------------------------------------------------

def default_t_grid(table, n=8, t_max=0.5):
    t_lo = max(2.0 / table.psi[-1], 1e-4)
    t_hi = min(t_max, 0.5 / table.psi[0])
    if t_lo >= t_hi:
        raise RangeError("exponent table too short for any time grid")
    return np.geomspace(t_lo, t_hi, n)


def _smoothing_integral(table, t, d):
    """omega * int rho^d exp(-t Re Phi) d rho, with a divergence flag.

    Integrates in log rho on the table; below the table exp(-t Phi) ~ 1.
    Beyond the table the log-integrand is extrapolated linearly when it
    still matters; a non-negative log-slope there means divergence.
    """
    lr = table._lr
    log_int = (d + 1) * lr - t * table.re_phi
    peak = float(np.max(log_int))
    body = np.exp(log_int - peak)
    val = float(integrate.simpson(body, x=lr)) * math.exp(peak)
    val += table.rho_min ** (d + 1) / (d + 1)
    tail_rel = math.exp(log_int[-1] - peak)
    k = max(8, len(lr) // 64)
    slope = float((log_int[-1] - log_int[-1 - k]) / (lr[-1] - lr[-1 - k]))
    divergent = False
    if tail_rel > 1e-12:
        if slope >= -0.05:
            divergent = True
        else:
            val += math.exp(log_int[-1]) / -slope
    return sphere_area(d) * val, divergent, slope


def check_condition_E(model, table, t_grid=None):
    if t_grid is None:
        t_grid = default_t_grid(table)
    d = model.d
    grid = []
    diverged = []
    for t in t_grid:
        val, div, slope = _smoothing_integral(table, float(t), d)
        if div:
            diverged.append({"t": float(t), "end_log_slope": slope})
            grid.append({"x": float(t), "ratio": math.inf})
            continue
        h = h_of_t(table, float(t)).h
        grid.append({"x": float(t), "ratio": val * h ** (d + 1)})
    if diverged:
        return ConditionReport(
            "E", Verdict.FAIL, math.inf, grid,
            {"rule": "integral diverges at the table end (log-slope >= -0.05)"},
            {"diverged": diverged})
    ts = np.array([g["x"] for g in grid])
    ratios = np.array([g["ratio"] for g in grid])
    verdict, stats = growth_verdict(1.0 / ts, ratios)
    return ConditionReport("E", verdict, float(ratios.max()), grid,
                           stats.pop("thresholds"), stats)


def check_condition_21(model, table, r0=1.0, n=48):
    """sup over r <= 2 r0 of Psi(1/r) / (r^d f(r)).

    Growth is measured against log log(1/r): slowly varying blow-up
    (a logarithm) is the failure mode of interest.
    """
    r_lo = 1.0 / table.rho_max
    r_hi = min(2.0 * r0, 1.0 / table.rho_min, math.exp(-2.0))
    if r_lo >= r_hi:
        raise RangeError("exponent table does not cover the probe radii")
    rs = np.geomspace(r_lo, r_hi, n)
    psi = table.psi_at(1.0 / rs)
    ratios = psi / (rs ** model.d * model.profile(rs))
    grid = [{"x": float(r), "ratio": float(v)} for r, v in zip(rs, ratios)]
    verdict, stats = growth_verdict(np.log(np.log(1.0 / rs)), ratios,
                                    pass_slope=0.2, fail_slope=0.5)
    return ConditionReport("21", verdict, float(ratios.max()), grid,
                           stats.pop("thresholds"), stats)


def check_weak_scaling(table, s0=None, factor=10.0, margin=0.05):
    """Lower and upper scaling indices of Psi over [s0, rho_max].

    The local index is log(Psi(factor r) / Psi(r)) / log(factor). Slowly
    varying corrections make it drift like 1 / log r, so the limit a of a
    fit a + b / log r over the upper half of the probes is folded into the
    estimates: lower = min(grid min, a), upper = max(grid max, a).
    PASS needs margin <= lower <= upper <= 2 - margin.
    """
    if s0 is None:
        s0 = max(table.rho_min, 10.0)
    if not (table.rho_min <= s0 < table.rho_max / factor):
        raise RangeError("s0 must leave at least one factor below rho_max")
    rs = np.geomspace(s0, table.rho_max / factor, 64)
    idx = np.log(table.psi_at(rs * factor) / table.psi_at(rs)) / math.log(factor)
    upper_half = rs >= math.sqrt(rs[0] * rs[-1])
    limit = float(np.polyfit(1.0 / np.log(rs[upper_half] * math.sqrt(factor)),
                             idx[upper_half], 1)[1]) if s0 > 1.0 else float(idx[-1])
    lower = min(float(idx.min()), limit)
    upper = max(float(idx.max()), limit)
    ok = margin <= lower <= upper <= 2.0 - margin
    grid = [{"x": float(r), "ratio": float(v)} for r, v in zip(rs, idx)]
    report = ConditionReport(
        "scaling", Verdict.PASS if ok else Verdict.FAIL, upper, grid,
        {"factor": factor, "margin": margin},
        {"lower_index": lower, "upper_index": upper, "limit_index": limit,
         "grid_min": float(idx.min()), "grid_max": float(idx.max())})
    return lower, upper, report
