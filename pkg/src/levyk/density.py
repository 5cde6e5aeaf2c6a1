"""Transition densities by Fourier inversion and by the small/large jump
splitting (cancellation-free in the far field)."""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma, jv

from . import kernels
from .convolution import (FieldGrid, compound_poisson, grid_convolve,
                          truncated_measure)
from .errors import NumericFailure, PreconditionFailed, ValidationError
from .exponent import check_condition_E, drift_correction, h_of_t
from .profiles import small_jump_second_moment, sphere_area, tail_mass
from .quadrature import gauss_legendre, oscillatory_tail
from .reports import Verdict, clean_json

log = logging.getLogger(__name__)

# exp(-t Phi) below e^-CUT_LEVEL is dropped from Fourier integrals.
CUT_LEVEL = 40.0
# Pointwise Fourier: direct quadrature up to K_HEAD / |x|, series beyond.
K_HEAD = 8.0 * math.pi
# Grid spacing relative to h(t) and the far-field/near-field boundary.
CELLS_PER_H = 16
NEAR_FIELD = 5.0
# The grid must also resolve frequencies up to t Phi = ALIAS_LEVEL, which
# bounds the aliasing error of grid sums by ~2 e^-ALIAS_LEVEL.
ALIAS_LEVEL = 16.0
# Box half-width: smallest X with t nu(|y| > X) below BOX_JUMP_MASS, within
# a budget of MAX_HALF_CELLS cells per side.
BOX_JUMP_MASS = 1e-10
MAX_HALF_CELLS = 1 << 19
# explicit boxes may exceed the automatic cap, up to this hard limit
HARD_HALF_CELLS = 1 << 21
# Support of the small-jump density in units of its width.
SMALL_SUPPORT = 24.0
# Clipped negative mass that aborts a computation.
CLIP_ABORT = 1e-6
# Roundoff floor of FFT based values, relative to the peak.
FFT_FLOOR = 1e-15


class Method(Enum):
    FOURIER = "FOURIER"
    SPLIT = "SPLIT"


class Flag:
    """Bit flags attached to density values."""
    OK = 0
    BEYOND_NEAR_FIELD = 1   # Fourier value outside |x| <= 5 h(t)
    BELOW_FLOOR = 2         # below the roundoff floor of the method
    CLIPPED = 4             # negative noise clipped to zero
    BOX_EDGE = 8            # outer half of the computational box


@dataclass(frozen=True)
class DensityGrid:
    t: float
    x: np.ndarray
    values: np.ndarray
    method: Method
    centered: bool          # values are p_t(x + t b_r) rather than p_t(x)
    err_flags: np.ndarray = field(compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def mass(self):
        return float(np.sum(self.values) * self.dx)

    def accurate(self, mask=Flag.BEYOND_NEAR_FIELD | Flag.BELOW_FLOOR | Flag.BOX_EDGE):
        return (self.err_flags & mask) == 0

    def at(self, x):
        """Log-linear interpolation of the values."""
        return _resample(self.x, self.values, np.asarray(x, dtype=float))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,p,method,err_flag\n")
            for x, p, f in zip(self.x, self.values, self.err_flags):
                fh.write(f"{x:.17g},{p:.17g},{self.method.value},{int(f)}\n")

    def metadata(self):
        out = {"t": self.t, "method": self.method.value,
               "drift_convention": "x+tb_r" if self.centered else "x",
               "n_points": int(self.x.size), "dx": self.dx,
               "mass": self.mass()}
        out.update(self.meta)
        return clean_json(out)

    def to_json(self, path=None):
        text = json.dumps(self.metadata(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


# ----------------------------------------------------------------------------
# Symbols
# ----------------------------------------------------------------------------

class TableSymbol:
    """Re Phi through the interpolant of an exponent table."""

    integrable = True

    def __init__(self, table):
        self.table = table

    def __call__(self, rho):
        return self.table.phi(np.asarray(rho, dtype=float))


class LogSymbol:
    """Phi(rho) = log(1 + rho^alpha): the geometric-stable symbol."""

    def __init__(self, alpha=1.0):
        if not 0.0 < alpha <= 2.0:
            raise ValidationError("alpha must lie in (0, 2]", "alpha")
        self.alpha = float(alpha)

    integrable = False

    def __call__(self, rho):
        return np.log1p(np.asarray(rho, dtype=float) ** self.alpha)


class SmallJumpSymbol:
    """Exponent of the jumps shorter than r (d = 1), evaluated exactly.

    2 int_0^r (1 - cos(rho s)) f(s) ds on fixed Gauss-Legendre panels in s,
    fine enough for the largest rho requested. The sharp cut at r leaves
    an oscillating component that interpolation in rho would smear, so
    no interpolation is used.
    """

    integrable = True

    def __init__(self, model, r, n_nodes=16):
        if model.d != 1:
            raise ValidationError("the small-jump symbol is implemented for d = 1", "d")
        if not r > 0.0:
            raise ValidationError("r must be > 0", "r")
        self.model = model
        self.r = float(r)
        self.n_nodes = n_nodes
        self.s_min = 1e-10 * self.r
        # below s_min the integrand is rho^2 s^2 f(s) to machine precision
        self.low = 0.5 * small_jump_second_moment(model, self.s_min)

    def _nodes(self, rho_max):
        r = self.r
        ds = min(r / 8.0, 8.0 / max(rho_max, 1e-300))
        n_geo = max(2, int(math.ceil(math.log2(ds / self.s_min))) + 1)
        geo = np.geomspace(self.s_min, ds, n_geo)
        lin = np.linspace(ds, r, int(math.ceil((r - ds) / ds)) + 1)
        edges = np.concatenate([geo, lin[1:]])
        if r > 1.0:
            edges = np.union1d(edges, [1.0])
        xg, wg = gauss_legendre(self.n_nodes)
        lo, hi = edges[:-1], edges[1:]
        nodes = 0.5 * (hi - lo)[:, None] * xg[None, :] + 0.5 * (hi + lo)[:, None]
        weights = 0.5 * (hi - lo)[:, None] * wg[None, :]
        return nodes.ravel(), weights.ravel()

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        flat = np.abs(rho.ravel())
        if flat.size == 0 or flat.max() == 0.0:
            return np.zeros_like(rho)
        s, w = self._nodes(float(flat.max()))
        fw = w * self.model.profile(s)
        out = 2.0 * kernels.versine_sum(s, fw, flat) + self.low * flat * flat
        return out.reshape(rho.shape)

    def uniform(self, drho, n):
        """Values at rho_k = k drho, k = 0..n-1."""
        rho = drho * np.arange(n)
        s, w = self._nodes(float(rho[-1]) if n > 1 else drho)
        fw = w * self.model.profile(s)
        return 2.0 * kernels.versine_grid(s, fw, drho, n) + self.low * rho * rho


def _cutoff(symbol, t, level=CUT_LEVEL):
    """Smallest rho on a log scan (100 per decade) with t Phi >= level."""
    for k in range(-4, 14):
        rho = np.geomspace(10.0 ** k, 10.0 ** (k + 1), 101)
        hit = np.nonzero(t * symbol(rho) >= level)[0]
        if hit.size:
            return float(rho[hit[0]])
    raise NumericFailure("symbol never reaches the cutoff level",
                         {"t": t, "level": level})


def _scale(symbol, t):
    """Width 1/rho of the density: t Phi(rho) = 1."""
    return 1.0 / _cutoff(symbol, t, 1.0)


# ----------------------------------------------------------------------------
# Fourier inversion
# ----------------------------------------------------------------------------

def _fft_even(symbol, t, period, n_fine):
    """(1/pi) int_0^inf cos(rho x) exp(-t Phi) d rho by the trapezoid rule
    with step 2 pi / period, on the grid x_j = j period / n_fine.

    The trapezoid sum equals the periodised density exactly (Poisson
    summation), so the only errors are aliasing and the cutoff.
    """
    drho = 2.0 * math.pi / period
    n = min(n_fine // 2, int(_cutoff(symbol, t) / drho) + 2)
    a = np.zeros(n_fine)
    rho = drho * np.arange(n)
    if hasattr(symbol, "uniform"):
        a[:n] = np.exp(-t * symbol.uniform(drho, n))
    else:
        a[:n] = np.exp(-t * symbol(rho))
    a[0] *= 0.5
    p = (drho / math.pi) * np.fft.fft(a).real
    p = np.fft.fftshift(p)
    x = (np.arange(n_fine) - n_fine // 2) * (period / n_fine)
    return x, p


def _pow2(n):
    return 1 << max(1, int(math.ceil(math.log2(max(n, 2)))))


def fourier_on_grid(symbol, t, dx, half, width=None, support=None):
    """Symmetric density on x_j = j dx (|j| <= half) by FFT.

    The FFT runs on a grid dx / k fine enough that pi / (dx / k) exceeds
    the symbol cutoff and is then subsampled. The period covers at least
    64 density widths and, unless ``support`` bounds the density, twice
    the box; values beyond ``support`` are returned as zero.
    """
    rho_cut = _cutoff(symbol, t)
    k = _pow2(math.ceil(dx * rho_cut / math.pi * 1.05))
    width = _scale(symbol, t) if width is None else width
    cells = math.ceil(64.0 * width / dx)
    if support is None:
        cells = max(cells, half + 1)
    else:
        cells = max(cells, math.ceil(support / dx))
    m_half = _pow2(cells)
    n_fine = 2 * m_half * k
    if n_fine > 1 << 25:
        raise NumericFailure("FFT grid too large; coarsen dx or shrink the box",
                             {"n_fine": n_fine})
    x, p = _fft_even(symbol, t, 2.0 * m_half * dx, n_fine)
    centre = n_fine // 2
    j = np.arange(-half, half + 1)
    inside = np.abs(j) < m_half
    out = np.zeros(j.size)
    out[inside] = p[centre + k * j[inside]]
    return out


def _head_nodes(a, b, x, n_nodes=24):
    """Gauss-Legendre nodes on [0, b] for cos(rho x)-type integrands:
    log-spaced panels from a, each spanning at most ~2 radians."""
    xg, wg = gauss_legendre(n_nodes)
    edges = [0.0, a]
    while edges[-1] < b:
        nxt = edges[-1] * 1.25
        if x > 0.0:
            nxt = min(nxt, edges[-1] + 2.0 / x)
        edges.append(min(nxt, b))
    e = np.array(edges)
    lo, hi = e[:-1], e[1:]
    nodes = 0.5 * (hi - lo)[:, None] * xg[None, :] + 0.5 * (hi + lo)[:, None]
    weights = 0.5 * (hi - lo)[:, None] * wg[None, :]
    return nodes.ravel(), weights.ravel()


def fourier_point_1d(symbol, t, x, rho_cut=None):
    """(1/pi) int_0^inf cos(rho x) exp(-t Phi(rho)) d rho at one x.

    Non-integrable symbols are summed in the Abel sense by the
    alternating-series tail.
    """
    x = abs(float(x))
    integrable = getattr(symbol, "integrable", True)
    if rho_cut is None:
        rho_cut = _cutoff(symbol, t) if integrable else math.inf
    if x == 0.0:
        if not integrable:
            return math.inf
        nodes, w = _head_nodes(1e-6 * rho_cut, rho_cut, 0.0)
        return float(np.dot(w, np.exp(-t * symbol(nodes)))) / math.pi
    head_end = min(K_HEAD / x, rho_cut)
    nodes, w = _head_nodes(min(1e-3, 0.01 * head_end), head_end, x)
    val = float(kernels.cosine_sum(nodes, w * np.exp(-t * symbol(nodes)),
                                   np.array([x]))[0])
    if head_end < rho_cut:
        tail = oscillatory_tail(lambda r: np.exp(-t * symbol(r)), head_end, x,
                                kind="cos", n_half=128)
        val += tail
    return val / math.pi


def _bessel_kernel(d, u):
    """Fourier transform of the normalised sphere measure."""
    nu = d / 2.0 - 1.0
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = gamma(d / 2.0) * (2.0 / u) ** nu * jv(nu, u)
    return np.where(u < 1e-8, 1.0, lam)


def fourier_point_radial(symbol, t, d, x):
    """(omega / (2 pi)^d) int rho^{d-1} Lambda_d(rho |x|) exp(-t Phi) d rho."""
    if not getattr(symbol, "integrable", True):
        raise ValidationError("radial inversion needs an integrable symbol")
    x = abs(float(x))
    rho_cut = _cutoff(symbol, t)
    nodes, w = _head_nodes(1e-6 * rho_cut, rho_cut, x)
    vals = nodes ** (d - 1) * _bessel_kernel(d, nodes * x) * np.exp(-t * symbol(nodes))
    return sphere_area(d) / (2.0 * math.pi) ** d * float(np.dot(w, vals))


def _require_E(model, table, override):
    rep = check_condition_E(model, table)
    if rep.verdict is not Verdict.PASS:
        if not override:
            raise PreconditionFailed(
                f"condition (E) is {rep.verdict.value}; pass override to force",
                condition="E")
        log.warning("condition (E) is %s; continuing on override", rep.verdict.value)
    return rep.verdict


def _box_extent(model, t, dx, x_grid=None):
    """Half-width with t nu(|y| > X) below BOX_JUMP_MASS, within the cell
    budget."""
    need = 0.0 if x_grid is None else float(np.max(np.abs(x_grid)))
    cap = MAX_HALF_CELLS * dx
    x = 2.0
    while x < cap and t * tail_mass(model, x) >= BOX_JUMP_MASS:
        x *= 1.25
    return max(min(x, cap), need)


def grid_spacing(model, table, t):
    """min(h(t) / 16, 2 pi / rho) with t Re Phi(rho) = ALIAS_LEVEL."""
    h = h_of_t(table, t).h
    rho = _cutoff(TableSymbol(table), t, ALIAS_LEVEL)
    return min(h / CELLS_PER_H, 2.0 * math.pi / rho)


def _resample(xs, vals, xq):
    """Exact where xq hits the grid; log-linear interpolation otherwise."""
    dx = xs[1] - xs[0]
    j = (xq - xs[0]) / dx
    jr = np.rint(j)
    out = np.empty(xq.shape)
    hit = (np.abs(j - jr) < 1e-9) & (jr >= 0) & (jr < xs.size)
    out[hit] = vals[jr[hit].astype(int)]
    miss = ~hit
    if np.any(miss):
        with np.errstate(divide="ignore"):
            lv = np.log(vals)
        li = np.interp(xq[miss], xs, lv, left=-np.inf, right=-np.inf)
        out[miss] = np.exp(li)
    return out


def _clip(values, dx, what):
    neg = values < 0.0
    flags = np.where(neg, Flag.CLIPPED, Flag.OK)
    info = {"clipped_count": int(neg.sum()), "clipped_mass": 0.0, "worst_negative": 0.0}
    if np.any(neg):
        info["clipped_mass"] = float(-values[neg].sum() * dx)
        info["worst_negative"] = float(values[neg].min())
        log.info("%s: clipped %d negative values (worst %.3g)", what,
                 info["clipped_count"], info["worst_negative"])
        if info["clipped_mass"] > CLIP_ABORT:
            raise NumericFailure(f"{what}: clipped mass exceeds {CLIP_ABORT}", info)
    return np.maximum(values, 0.0), flags, info


def default_grid(model, table, t, x_grid=None, dx=None):
    dx = grid_spacing(model, table, t) if dx is None else float(dx)
    return FieldGrid.covering(dx, _box_extent(model, t, dx, x_grid))


def density_fourier(model, table, t, x_grid=None, symbol=None, override=False,
                    centered=False, pointwise=False):
    """p_t by Fourier inversion.

    d = 1 uses an FFT on a uniform grid (or pointwise quadrature on
    request or for non-integrable symbols); d >= 2 is pointwise in |x|.
    A custom ``symbol`` replaces Re Phi and skips the (E) gate.
    """
    if not t > 0.0:
        raise ValidationError("t must be > 0", "t")
    d = model.d if model is not None else 1
    if symbol is None:
        e_verdict = _require_E(model, table, override).value
        symbol = TableSymbol(table)
        h = h_of_t(table, t).h
    else:
        e_verdict = None
        h = _scale(symbol, t) if getattr(symbol, "integrable", True) else None
    b = np.zeros(d) if model is None else drift_correction(model, h or 1.0)
    shift = 0.0 if centered or d > 1 else float(t * b[0])
    meta = {"r": None, "condition_E": e_verdict, "h": h}

    if d == 1 and x_grid is None:
        grid = default_grid(model, table, t)
        xs = grid.x
    else:
        xs = np.asarray(x_grid, dtype=float)
    use_fft = (d == 1 and not pointwise and getattr(symbol, "integrable", True))
    if use_fft:
        dxs = np.diff(xs)
        uniform = xs.size > 1 and np.allclose(dxs, dxs[0], rtol=1e-9, atol=0.0)
        base = xs - shift
        if uniform and abs(base[0] / dxs[0] - round(base[0] / dxs[0])) < 1e-9:
            dx = float(dxs[0])
            half = int(round(np.max(np.abs(base)) / dx))
            vals = fourier_on_grid(symbol, t, dx, half)
            vals = vals[np.rint(base / dx).astype(int) + half]
        else:
            dx = (h or 1.0) / (4 * CELLS_PER_H)
            half = int(math.ceil(np.max(np.abs(base)) / dx)) + 2
            fine = fourier_on_grid(symbol, t, dx, half)
            fx = dx * np.arange(-half, half + 1)
            vals = CubicSpline(fx, fine)(base)
        peak = float(np.max(vals))
        vals, flags, info = _clip(vals, _spacing(xs), "fourier")
        flags = flags | np.where(vals < FFT_FLOOR * peak, Flag.BELOW_FLOOR, Flag.OK)
    else:
        if d == 1:
            vals = np.array([fourier_point_1d(symbol, t, x - shift) for x in xs])
        else:
            vals = np.array([fourier_point_radial(symbol, t, d, x) for x in xs])
        vals, flags, info = _clip(vals, _spacing(xs), "fourier")
    if h is not None:
        flags = flags | np.where(np.abs(xs - shift) > NEAR_FIELD * h,
                                 Flag.BEYOND_NEAR_FIELD, Flag.OK)
    meta.update(info)
    return DensityGrid(float(t), xs, vals, Method.FOURIER, centered,
                       flags.astype(np.int64), meta)


def _spacing(xs):
    return float(xs[1] - xs[0]) if xs.size > 1 else 1.0


# ----------------------------------------------------------------------------
# Splitting construction (d = 1)
# ----------------------------------------------------------------------------

def _small_jump_values(model, t, r, dx, half, table=None):
    sym = SmallJumpSymbol(model, r)
    width = max(_scale(sym, t), r)
    vals = fourier_on_grid(sym, t, dx, half, width=width,
                           support=SMALL_SUPPORT * width)
    peak = float(vals.max())
    vals, flags, info = _clip(vals, dx, "small-jump density")
    vals = np.where(vals < FFT_FLOOR * peak, 0.0, vals)
    return vals, info, width


def small_jump_density(model, t, r, x_grid=None, table=None, dx=None):
    """Density of the small-jump part (jumps of size below r)."""
    if not t > 0.0:
        raise ValidationError("t must be > 0", "t")
    if x_grid is None:
        dx = r / CELLS_PER_H if dx is None else dx
        half = int(math.ceil(40.0 * r / dx))
        xs = dx * np.arange(-half, half + 1)
    else:
        xs = np.asarray(x_grid, dtype=float)
        dx = _spacing(xs) if dx is None else dx
        half = int(math.ceil(np.max(np.abs(xs)) / dx))
    vals, info, width = _small_jump_values(model, t, r, dx, half, table)
    full_x = dx * np.arange(-half, half + 1)
    out = vals if x_grid is None else _resample(full_x, vals, xs)
    flags = np.where(out <= 0.0, Flag.BELOW_FLOOR, Flag.OK).astype(np.int64)
    info.update(r=float(r), part="small_jump", width=width)
    return DensityGrid(float(t), xs, out, Method.FOURIER, True, flags, info)


def tail_decay_fit(grid, h, lo=5.0, hi=20.0):
    """Slope of log p against s log s, s = |x| / h, on s in [lo, hi].

    Super-polynomial decay shows as a clearly negative slope. Only values
    above the roundoff floor enter the fit.
    """
    s = np.abs(grid.x) / h
    sel = (s >= lo) & (s <= hi) & (grid.values > 0.0) & (grid.x > 0)
    if sel.sum() < 3:
        raise NumericFailure("too few resolved points for the decay fit",
                             {"points": int(sel.sum())})
    u = s[sel] * np.log(s[sel])
    return float(np.polyfit(u, np.log(grid.values[sel]), 1)[0])


@dataclass(frozen=True)
class SplitParts:
    t: float
    r: float
    grid: FieldGrid
    small: np.ndarray
    large: object          # CompoundPoisson
    drift: np.ndarray
    small_info: dict = field(default_factory=dict)


def split_parts(model, table, t, r=None, dx=None, x_extent=None, n_max=None):
    ts = h_of_t(table, t)
    r = ts.h if r is None else float(r)
    dx = grid_spacing(model, table, t) if dx is None else float(dx)
    extent = _box_extent(model, t, dx) if x_extent is None else float(x_extent)
    grid = FieldGrid.covering(dx, extent)
    if grid.half > HARD_HALF_CELLS:
        raise NumericFailure("density grid too large; coarsen dx or shrink the box",
                             {"half_cells": grid.half, "limit": HARD_HALF_CELLS,
                              "dx": dx, "extent": extent})
    small, info, _ = _small_jump_values(model, t, r, dx, grid.half, table)
    info["mass"] = float(small.sum() * dx)
    meas = truncated_measure(model, r, dx, extent)
    cp = compound_poisson(meas, t, n_max)
    return SplitParts(float(t), r, grid, small, cp,
                      drift_correction(model, r), info)


def combine(parts):
    """p_t(x + t b_r) on the grid: atom * p_small + (grid part * p_small).

    Returns the values and whether any FFT step was involved.
    """
    small = parts.small
    nz = np.nonzero(small)[0]
    i0, i1 = int(nz[0]), int(nz[-1])
    # symmetric trim keeps the kernel centred
    k = max(parts.grid.half - i0, i1 - parts.grid.half)
    trim = small[parts.grid.half - k:parts.grid.half + k + 1]
    cp = parts.large
    conv, used_fft = grid_convolve(cp.values, trim)
    return cp.atom * small + np.maximum(conv, 0.0), used_fft or cp.spectral


def density_split(model, table, t, x_grid=None, r=None, centered=False,
                  override=False, dx=None, n_max=None, x_extent=None):
    """p_t from the small-jump density and the compound-Poisson large jumps."""
    if not t > 0.0:
        raise ValidationError("t must be > 0", "t")
    if model.d != 1:
        raise ValidationError("the splitting construction is implemented for d = 1", "d")
    e_verdict = _require_E(model, table, override).value
    if dx is None:
        dx = grid_spacing(model, table, t)
    if x_extent is None:
        x_extent = _box_extent(model, t, dx, x_grid)
    parts = split_parts(model, table, t, r, dx, x_extent, n_max)
    vals, used_fft = combine(parts)
    xs_int = parts.grid.x
    shift = 0.0 if centered else float(t * parts.drift[0])
    cp = parts.large
    budget = {
        "series_leftover": cp.leftover,
        "box_loss": cp.box_loss,
        "small_mass_error": abs(parts.small_info["mass"] - 1.0),
        "series_terms": cp.n_terms,
        "atom": cp.atom,
        "spectral": used_fft,
        "jump_mass_beyond_box": t * tail_mass(model, x_extent),
    }
    for key in ("series_leftover", "box_loss", "small_mass_error"):
        if budget[key] > 1e-3:
            log.warning("split density: %s = %.3g exceeds 1e-3", key, budget[key])
    if x_grid is None:
        xs = xs_int + shift
        out = vals
    else:
        xs = np.asarray(x_grid, dtype=float)
        out = _resample(xs_int, vals, xs - shift)
    flags = np.where(np.abs(xs - shift) > 0.5 * x_extent, Flag.BOX_EDGE, Flag.OK)
    floor = 1e-13 * float(np.max(vals)) if used_fft else 0.0
    flags = flags | np.where(out <= floor, Flag.BELOW_FLOOR, Flag.OK)
    meta = {"r": parts.r, "h": h_of_t(table, t).h, "condition_E": e_verdict,
            "error_budget": budget, "box_half_width": float(x_extent),
            "drift": parts.drift.tolist()}
    meta.update({k: v for k, v in parts.small_info.items() if k.startswith("clipped")})
    return DensityGrid(float(t), xs, out, Method.SPLIT, centered,
                       flags.astype(np.int64), meta)


@dataclass(frozen=True)
class SemigroupResult:
    t: float
    deviation: float        # sup |p_2t - p_t * p_t| / sup p_2t, inner half
    pointwise: float        # sup of the pointwise relative gap, inner half
    leakage: float          # 1 - mass of p_t on the grid
    inconclusive: bool


def semigroup_check(model, table, t, x_grid=None, override=False):
    """Chapman-Kolmogorov defect between p_2t and p_t * p_t (d = 1)."""
    dx = grid_spacing(model, table, t)
    if x_grid is None:
        extent = _box_extent(model, 2.0 * t, dx)
    else:
        extent = float(np.max(np.abs(x_grid)))
    p1 = density_split(model, table, t, dx=dx, x_extent=extent,
                       centered=True, override=override)
    p2 = density_split(model, table, 2.0 * t, dx=dx, x_extent=extent,
                       centered=True, override=override)
    conv = grid_convolve(p1.values, p1.values)[0] * dx
    inner = np.abs(p1.x) <= 0.5 * extent
    gap = np.abs(p2.values - conv)[inner]
    ref = p2.values[inner]
    dev = float(gap.max() / ref.max())
    pos = ref > 0.0
    pointwise = float(np.max(gap[pos] / ref[pos]))
    leak = 1.0 - p1.mass()
    return SemigroupResult(float(t), dev, pointwise, leak, abs(leak) > 1e-4)
