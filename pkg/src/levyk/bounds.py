"""Empirical checks of the two-sided density bounds and the exponential
tempering dichotomy."""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .convolution import check_condition_C, classify_F
from .density import Flag, _box_extent, density_split, grid_spacing
from .errors import PreconditionFailed, ValidationError
from .exponent import check_condition_E, exponent_table, h_of_t
from .profiles import LevyModel
from .reports import Verdict, clean_json, growth_verdict

# Largest time of the default grid and the target h(t0) <= H_TARGET * r0.
T_MAX = 0.025
H_TARGET = 0.05
# Far-field probes: |x| in [FAR_LO r0, FAR_HI r0].
FAR_LO = 4.0
FAR_HI = 20.0
N_PROBES = 16
# Envelope spread (max sup / min inf) accepted as bounded in the near field.
NEAR_BAND = 10.0
# Inner-edge ratio p_t(theta h) / (t g(theta h)) is tracked over h(t) in
# [EDGE_H_MIN r0, H_TARGET r0]; a logarithmic blow-up shows as growth
# against log log(1 / h).
EDGE_H_MIN = 1e-3
EDGE_LEVELS = 5
# Dichotomy: growth-factor margin and oracle agreement.
DICHOTOMY_MARGIN = 3.0
ORACLE_TOL = 0.05


class DichotomyVerdict(Enum):
    DICHOTOMY_CONFIRMED = "DICHOTOMY_CONFIRMED"
    NOT_CONFIRMED = "NOT_CONFIRMED"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def exit_code(self):
        return {"DICHOTOMY_CONFIRMED": 0, "NOT_CONFIRMED": 1, "INCONCLUSIVE": 3}[self.value]


@dataclass
class BoundReport:
    theorem: str
    t_grid: list
    theta: float
    near: dict
    far: dict
    min_form: dict
    verdict: Verdict
    near_verdict: Verdict = None
    far_verdict: Verdict = None
    curves: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return clean_json({
            "theorem": self.theorem,
            "t_grid": list(self.t_grid),
            "theta": self.theta,
            "near": self.near,
            "far": self.far,
            "min_form": self.min_form,
            "verdict": self.verdict.value,
            "near_verdict": self.near_verdict.value if self.near_verdict else None,
            "far_verdict": self.far_verdict.value if self.far_verdict else None,
            "curves": self.curves,
            "diagnostics": self.diagnostics,
        })

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def curves_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,x,ratio\n")
            for c in self.curves:
                for x, v in zip(c["x"], c["ratio"]):
                    fh.write(f"{c['t']:.17g},{x:.17g},{v:.17g}\n")


@dataclass
class DichotomyReport:
    t: float
    window: tuple
    critical: dict
    subcritical: dict
    factor_ratio: float
    margin: float
    oracle_gap: float
    near_field_ratio: float
    verdict: DichotomyVerdict
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return clean_json({
            "t": self.t, "window": list(self.window),
            "critical": self.critical, "subcritical": self.subcritical,
            "factor_ratio": self.factor_ratio, "margin": self.margin,
            "oracle_gap": self.oracle_gap,
            "near_field_ratio": self.near_field_ratio,
            "verdict": self.verdict.value, "diagnostics": self.diagnostics,
        })

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def curves_csv(self, path):
        with open(path, "w") as fh:
            fh.write("model,x,ratio,oracle\n")
            for name, part in (("critical", self.critical), ("subcritical", self.subcritical)):
                for x, v, o in zip(part["x"], part["ratio"], part["oracle"]):
                    fh.write(f"{name},{x:.17g},{v:.17g},{o:.17g}\n")


# ----------------------------------------------------------------------------
# Shared pieces
# ----------------------------------------------------------------------------

def bound_table(model):
    return exponent_table(model, 1e-3, 1e8, 512)


def default_bound_t_grid(table, r0=1.0, t_max=T_MAX):
    """Two times ending at t0 = min(t_max, 1 / Psi(1 / (H_TARGET r0))), so
    that h(t0) <= H_TARGET r0 and the far probes sit well outside the
    density's plateau."""
    t0 = min(t_max, 1.0 / float(table.psi_at(1.0 / (H_TARGET * r0))))
    return [0.5 * t0, t0]


def _require(model, table, conditions, r0=1.0):
    """Run precondition checkers; raise on anything but PASS."""
    results = {}
    for cond in conditions:
        if cond == "E":
            rep = check_condition_E(model, table)
        elif cond == "C":
            rep = check_condition_C(model, r0)
        else:
            raise ValueError(cond)
        results[cond] = rep.verdict.value
        if rep.verdict is not Verdict.PASS:
            raise PreconditionFailed(
                f"precondition ({cond}) is {rep.verdict.value}", condition=cond)
    return results


def _theta(p, h):
    """Largest theta with p(theta h) >= p(0) / 2 (values centred at 0)."""
    x = p.x
    pos = x >= 0.0
    xs, vs = x[pos], p.values[pos]
    p0 = vs[0]
    below = np.nonzero(vs < 0.5 * p0)[0]
    if below.size == 0:
        return float(xs[-1] / h)
    i = int(below[0])
    # linear interpolation of the crossing
    x0, x1, v0, v1 = xs[i - 1], xs[i], vs[i - 1], vs[i]
    xc = x0 + (0.5 * p0 - v0) * (x1 - x0) / (v1 - v0)
    return float(xc / h)


def _probe_floor(p):
    """Smallest t g(x) worth probing: 1e-3 of the series and grid budget."""
    budget = p.meta.get("error_budget", {})
    err = budget.get("series_leftover", 0.0) + budget.get("box_loss", 0.0)
    return max(1e-3 * err, 1e-290)


def _combine_verdicts(verdicts):
    if any(v is Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if verdicts and all(v is Verdict.PASS for v in verdicts):
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


def _densities(model, table, t_grid, x_hi=FAR_HI):
    """Centred split densities whose box covers the far probes."""
    out = []
    for t in t_grid:
        t = float(t)
        dx = grid_spacing(model, table, t)
        extent = max(_box_extent(model, t, dx), 2.5 * x_hi)
        out.append(density_split(model, table, t, centered=True, dx=dx,
                                 x_extent=extent))
    return out


def _far_envelope(model, dens, r0):
    """R(x) = p_t(x + t b) / (t g(x)) at the far probes, per t."""
    curves, verdicts, infs, sups = [], [], [], []
    covered = 0
    total = 0
    for p in dens:
        xs = np.geomspace(FAR_LO * r0, FAR_HI * r0, N_PROBES)
        vals = p.at(xs)
        idx = np.clip(np.rint((xs - p.x[0]) / p.dx).astype(int), 0, p.x.size - 1)
        ok = (p.err_flags[idx] & (Flag.BELOW_FLOOR | Flag.BOX_EDGE)) == 0
        ok &= p.t * model.profile(xs) > _probe_floor(p)
        total += xs.size
        covered += int(ok.sum())
        xs, vals = xs[ok], vals[ok]
        ratio = vals / (p.t * model.profile(xs))
        v, st = growth_verdict(np.log(xs), ratio)
        verdicts.append(v)
        curves.append({"t": p.t, "x": xs.tolist(), "ratio": ratio.tolist(),
                       "verdict": v.value, "slope": st.get("slope"),
                       "spread": st.get("spread")})
        if ratio.size:
            infs.append(float(ratio.min()))
            sups.append(float(ratio.max()))
    env = {"inf": min(infs) if infs else None, "sup": max(sups) if sups else None,
           "coverage": covered / total if total else 0.0,
           "probe_range": [FAR_LO * r0, FAR_HI * r0]}
    return env, _combine_verdicts(verdicts), curves


def _near_envelope(model, table, dens, theta):
    d = model.d
    infs, sups = [], []
    for p in dens:
        h = h_of_t(table, p.t).h
        sel = np.abs(p.x) <= theta * h
        v = p.values[sel] * h ** d
        infs.append(float(v.min()))
        sups.append(float(v.max()))
    lo, hi = min(infs), max(sups)
    spread = hi / lo if lo > 0 else math.inf
    if not math.isfinite(spread):
        verdict = Verdict.FAIL
    elif spread < NEAR_BAND:
        verdict = Verdict.PASS
    elif spread > NEAR_BAND ** 2:
        verdict = Verdict.FAIL
    else:
        verdict = Verdict.INCONCLUSIVE
    env = {"inf": lo, "sup": hi, "spread": spread, "per_t_inf": infs,
           "per_t_sup": sups, "band": NEAR_BAND}
    return env, verdict


def _edge_envelope(model, table, theta, r0):
    """p_t / (t g) at |x| = theta h(t) and over theta h(t) <= |x| <= r0, on
    times chosen so that h(t) spans [EDGE_H_MIN r0, H_TARGET r0]."""
    hs = np.geomspace(H_TARGET * r0, EDGE_H_MIN * r0, EDGE_LEVELS)
    edge, infs, sups, ts = [], [], [], []
    for h_level in hs:
        t = 1.0 / float(table.psi_at(1.0 / h_level))
        p = density_split(model, table, t, centered=True)
        h = h_of_t(table, t).h
        xs = np.geomspace(theta * h, r0, 32)
        ratio = p.at(xs) / (t * model.profile(xs))
        ts.append(t)
        edge.append(float(ratio[0]))
        infs.append(float(ratio.min()))
        sups.append(float(ratio.max()))
    verdict, st = growth_verdict(np.log(np.log(1.0 / hs)), np.array(edge))
    if min(infs) <= 0.0:
        verdict = Verdict.FAIL
    env = {"t": ts, "h": hs.tolist(), "edge_ratio": edge, "inf": min(infs),
           "sup": max(sups), "slope": st.get("slope"), "verdict": verdict.value}
    return env, verdict


# ----------------------------------------------------------------------------
# Bound checks
# ----------------------------------------------------------------------------

def verify_theorem_12(model, t_grid=None, theta=None, table=None, r0=1.0):
    """Near field: plateau h(t)^-d over |x| <= theta h(t) and t g(x) over
    theta h(t) <= |x| <= r0; far field: t g(x) at |x| in [4 r0, 20 r0]."""
    if model.d != 1:
        raise ValidationError("bound checks use the splitting densities (d = 1)", "d")
    table = bound_table(model) if table is None else table
    pre = _require(model, table, ["E"])
    t_grid = default_bound_t_grid(table, r0) if t_grid is None else list(t_grid)
    dens = _densities(model, table, t_grid)
    if theta is None:
        theta = _theta(dens[-1], h_of_t(table, dens[-1].t).h)
    near, plateau_v = _near_envelope(model, table, dens, theta)
    near["plateau_verdict"] = plateau_v.value
    near["intermediate"], edge_v = _edge_envelope(model, table, theta, r0)
    near_v = _combine_verdicts([plateau_v, edge_v])
    far, far_v, curves = _far_envelope(model, dens, r0)
    if far["inf"] is not None and far["inf"] <= 0.0:
        far_v = Verdict.FAIL
    verdict = _combine_verdicts([near_v, far_v])
    return BoundReport("t12", [float(t) for t in t_grid], theta, near, far, None,
                       verdict, near_v, far_v, curves, {"preconditions": pre})


def verify_theorem_13(model, t_grid=None, table=None, r0=1.0):
    """Far-field two-sided bound p_t ~ t g(x), the density counterpart of
    the convolution-dominance condition."""
    rep = verify_theorem_12(model, t_grid, None, table, r0)
    rep.theorem = "t13"
    rep.verdict = rep.far_verdict
    return rep


def verify_min_form(model, t_grid=None, table=None, x_max=None):
    """p_t(x + t b) / min(h(t)^-d, t g(x)) over 0 < |x| <= x_max."""
    if model.d != 1:
        raise ValidationError("bound checks use the splitting densities (d = 1)", "d")
    table = bound_table(model) if table is None else table
    pre = _require(model, table, ["E"])
    t_grid = default_bound_t_grid(table) if t_grid is None else list(t_grid)
    dens = _densities(model, table, t_grid)
    x_max = FAR_HI if x_max is None else float(x_max)
    curves, verdicts, infs, sups, jumps = [], [], [], [], []
    for p in dens:
        h = h_of_t(table, p.t).h
        sel = (p.x > 0.0) & (p.x <= x_max) & p.accurate(Flag.BELOW_FLOOR | Flag.BOX_EDGE)
        xs, vals = p.x[sel], p.values[sel]
        floor = np.minimum(h ** -model.d, p.t * model.profile(xs))
        ratio = vals / floor
        # continuity across the crossover of the two normalisations
        cross = np.nonzero(np.diff(np.sign(h ** -model.d - p.t * model.profile(xs))))[0]
        if cross.size:
            i = int(cross[0])
            jumps.append(float(abs(math.log(ratio[i + 1] / ratio[i]))))
        lx = np.log(xs)
        probe = np.linspace(lx[0], lx[-1], 48)
        sample = np.exp(np.interp(probe, lx, np.log(ratio)))
        v, st = growth_verdict(probe, sample, two_sided=True)
        verdicts.append(v)
        infs.append(float(ratio.min()))
        sups.append(float(ratio.max()))
        curves.append({"t": p.t, "x": np.exp(probe).tolist(), "ratio": sample.tolist(),
                       "verdict": v.value, "slope": st.get("slope")})
    env = {"inf": min(infs), "sup": max(sups), "crossover_log_jump": max(jumps) if jumps else None}
    verdict = _combine_verdicts(verdicts)
    if env["inf"] <= 0.0:
        verdict = Verdict.FAIL
    return BoundReport("minform", [float(t) for t in t_grid], None, None, None, env,
                       verdict, curves=curves, diagnostics={"preconditions": pre})


def verify_theorem_14(model, t_grid=None, r0=1.0, table=None):
    """Far-field upper bound p_t(x + t b_h) <= C t f(|x|) for |x| > 4 r0."""
    if model.d != 1:
        raise ValidationError("bound checks use the splitting densities (d = 1)", "d")
    table = bound_table(model) if table is None else table
    pre = {"D": "PASS"}   # absolutely continuous radial model: f itself localises nu
    pre.update(_require(model, table, ["C", "E"], r0))
    t0 = min(T_MAX, 1.0 / float(table.psi_at(1.0 / r0)))
    if t_grid is None:
        t_grid = default_bound_t_grid(table, r0, t_max=t0)
    dens = _densities(model, table, t_grid)
    # only the upper bound is asserted: FAIL on growth, PASS on none
    far, far_v, curves = _far_envelope(model, dens, r0)
    far["t0"] = t0
    return BoundReport("t14", [float(t) for t in t_grid], None, None, far, None,
                       far_v, far_verdict=far_v, curves=curves,
                       diagnostics={"preconditions": pre})


# ----------------------------------------------------------------------------
# Dichotomy
# ----------------------------------------------------------------------------

def oracle_far_ratio(model, t, r, xs, dx=0.01, extent=60.0, n_terms=80):
    """Brute-force far-field R(x) from the compound-Poisson series alone.

    Independent of the main path: midpoint-sampled large-jump density on
    its own grid, numpy convolutions, and the small-jump density replaced
    by a point mass (its width h(t) only smooths the far field at order
    h^2).
    """
    n = int(round(extent / dx))
    y = dx * np.arange(-n, n + 1)
    w = np.zeros_like(y)
    far = np.abs(y) > r
    w[far] = model.profile(np.abs(y[far])) * dx
    lam = float(w.sum())
    acc = np.zeros_like(w)
    power = w.copy()
    coef = math.exp(-t * lam) * t
    acc += coef * power
    for k in range(2, n_terms + 1):
        power = np.convolve(power, w)[n:n + y.size]
        coef *= t / k
        acc += coef * power
        if stats.poisson.sf(k, t * lam) < 1e-15 and coef * power[-1] < 1e-12 * acc[-1]:
            break
    dens = acc / dx
    vals = np.interp(xs, y, dens)
    return vals / (t * model.profile(xs))


def dichotomy_experiment(kappa, d, t, model_critical, model_subcritical,
                         window=(5.0, 20.0), margin=DICHOTOMY_MARGIN,
                         oracle_tol=ORACLE_TOL):
    """Growth of R(x) = p_t(x + t b) / (t g(x)) across the window for a
    model on the exponential critical line and a subcritical one."""
    for mdl in (model_critical, model_subcritical):
        if mdl.d != d or mdl.profile.kappa != kappa:
            raise ValidationError("both models must share kappa and d")
    pc = model_critical.profile
    if not (pc.m > 0.0 and pc.beta == 1.0 and pc.delta <= (d + 1) / 2.0):
        raise ValidationError("critical model needs beta = 1 and delta <= (d+1)/2")
    if classify_F(d, model_subcritical.profile.m, model_subcritical.profile.beta,
                  model_subcritical.profile.delta).holds is False:
        raise ValidationError("subcritical model must satisfy condition (F)")
    lo, hi = window
    xs = np.geomspace(lo, hi, N_PROBES)
    parts = {}
    near = []
    worst_gap = 0.0
    for name, mdl in (("critical", model_critical), ("subcritical", model_subcritical)):
        table = bound_table(mdl)
        p = density_split(mdl, table, t, centered=True)
        h = h_of_t(table, t).h
        ratio = p.at(xs) / (t * mdl.profile(xs))
        oracle = oracle_far_ratio(mdl, t, p.meta["r"], xs)
        gap = float(np.max(np.abs(ratio / oracle - 1.0)))
        worst_gap = max(worst_gap, gap)
        factor = float(ratio[-1] / ratio[0])
        factor_oracle = float(oracle[-1] / oracle[0])
        near.append(float(p.at(np.array([0.0]))[0] * h ** d))
        parts[name] = {"model": mdl.to_dict(), "x": xs.tolist(), "ratio": ratio.tolist(),
                       "oracle": oracle.tolist(), "growth_factor": factor,
                       "oracle_growth_factor": factor_oracle, "oracle_gap": gap,
                       "h": h}
    fr = parts["critical"]["growth_factor"] / parts["subcritical"]["growth_factor"]
    near_ratio = max(near) / min(near)
    if worst_gap > oracle_tol:
        verdict = DichotomyVerdict.INCONCLUSIVE
    elif fr >= margin:
        verdict = DichotomyVerdict.DICHOTOMY_CONFIRMED
    elif fr <= 1.0:
        verdict = DichotomyVerdict.NOT_CONFIRMED
    else:
        verdict = DichotomyVerdict.INCONCLUSIVE
    return DichotomyReport(float(t), (lo, hi), parts["critical"], parts["subcritical"],
                           fr, margin, worst_gap, near_ratio, verdict,
                           {"oracle_tolerance": oracle_tol})


def default_dichotomy_pair(d=1):
    """Lamperti-type critical model and a subexponential one, same kappa."""
    from .profiles import KappaClass
    kappa = KappaClass.poly_log(0.5, 0.0)
    crit = LevyModel.create(d, kappa, 1.0, 1.0, 0.0)
    sub = LevyModel.create(d, kappa, 1.0, 0.5, 0.0)
    return kappa, crit, sub
