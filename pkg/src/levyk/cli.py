"""Command-line entry point: ``levyk <command> --config model.json``.

Exit codes: 0 PASS (or success), 1 FAIL, 3 INCONCLUSIVE, 2 usage or
configuration error, 4 precondition refused, 5 numeric failure.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bounds, convolution, density, exponent
from .errors import (BoxTooSmall, NumericFailure, PreconditionFailed, RangeError,
                     ValidationError)
from .profiles import LevyModel, tail_mass
from .reports import ConditionReport, Verdict, clean_json
from .svg import loglog_svg

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_PRECONDITION = 4
EXIT_NUMERIC = 5

CONDITIONS = ("C", "P", "E", "F", "21", "31", "scaling")
THEOREMS = ("t12", "t13", "t14", "minform", "dichotomy")
EMITS = ("csv", "json", "svg")

# Allowed override keys per config section.
SECTIONS = {
    "exponent": {"rho_min", "rho_max", "n_points", "t", "eval_rho"},
    "check": {"r0", "x_probes", "r_probes", "s_probes", "t_grid"},
    "density": {"t", "x_grid", "r", "override_E"},
    "verify": {"t", "t_grid", "r0", "theta", "window", "critical", "subcritical"},
    "convolve": {"r", "dx", "x_max", "n_max"},
}

log = logging.getLogger("levyk")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: LevyModel
    out: str
    emit: frozenset
    overrides: dict = field(default_factory=dict)

    def section(self, name):
        return self.overrides.get(name, {})


# ----------------------------------------------------------------------------
# Config validation
# ----------------------------------------------------------------------------

def _number(value, name, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number", name)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite", name)
    if positive and not value > 0.0:
        raise ValidationError(f"{name} must be > 0", name)
    if integer:
        if value != int(value) or value < 1:
            raise ValidationError(f"{name} must be a positive integer", name)
        return int(value)
    return value


def _number_list(value, name, positive=True):
    if isinstance(value, dict):
        for key in ("min", "max", "n"):
            if key not in value:
                raise ValidationError(f"missing field {name}.{key}", f"{name}.{key}")
        lo = _number(value["min"], f"{name}.min")
        hi = _number(value["max"], f"{name}.max")
        n = _number(value["n"], f"{name}.n", integer=True)
        if not hi > lo:
            raise ValidationError(f"{name}.max must exceed {name}.min", name)
        return np.linspace(lo, hi, n)
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{name} must be a non-empty list", name)
    vals = np.array([_number(v, f"{name}[{i}]", positive) for i, v in enumerate(value)])
    return vals


def validate_overrides(raw):
    """Check override sections and convert their values; field-level errors."""
    out = {}
    for sec, body in raw.items():
        if sec == "model":
            continue
        if sec not in SECTIONS:
            raise ValidationError(f"unknown config section {sec}", sec)
        if not isinstance(body, dict):
            raise ValidationError(f"{sec} must be an object", sec)
        conv = {}
        for key, val in body.items():
            name = f"{sec}.{key}"
            if key not in SECTIONS[sec]:
                raise ValidationError(f"unknown field {name}", name)
            if key in ("n_points", "n_max"):
                conv[key] = _number(val, name, integer=True)
            elif key in ("t", "rho_min", "rho_max", "r0", "r", "dx", "x_max", "theta"):
                if key == "t" and sec == "exponent":
                    conv[key] = _number_list(val, name)
                else:
                    conv[key] = _number(val, name, positive=True)
            elif key in ("x_probes", "r_probes", "s_probes", "t_grid", "eval_rho"):
                conv[key] = _number_list(val, name)
            elif key == "x_grid":
                conv[key] = _number_list(val, name, positive=False)
            elif key == "window":
                w = _number_list(val, name)
                if w.size != 2 or not w[1] > w[0]:
                    raise ValidationError(f"{name} must be [lo, hi] with lo < hi", name)
                conv[key] = (float(w[0]), float(w[1]))
            elif key in ("critical", "subcritical"):
                conv[key] = _model_from(val, name)
            elif key == "override_E":
                if not isinstance(val, bool):
                    raise ValidationError(f"{name} must be true or false", name)
                conv[key] = val
        out[sec] = conv
    ex = out.get("exponent", {})
    lo, hi = ex.get("rho_min", 1e-3), ex.get("rho_max", 1e8)
    if not lo < hi:
        raise ValidationError("exponent.rho_min must be below exponent.rho_max",
                              "exponent.rho_min")
    return out


def _model_from(data, prefix=None):
    try:
        return LevyModel.from_dict(data)
    except ValidationError as exc:
        if prefix and exc.field:
            raise ValidationError(str(exc).replace(exc.field, f"{prefix}.{exc.field}"),
                                  f"{prefix}.{exc.field}")
        raise


def load_config(path, out, emit):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    if "model" in raw:
        model = _model_from(raw["model"], "model")
        overrides = validate_overrides(raw)
    else:
        model = _model_from(raw)
        overrides = {}
    return RunConfig(model, out, emit, overrides)


def parse_emit(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in EMITS]
    if bad:
        raise UsageError(f"--emit accepts {','.join(EMITS)}; got {','.join(bad)}")
    return frozenset(items)


# ----------------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------------

def _write_json(cfg, name, payload):
    if "json" not in cfg.emit:
        return None
    path = os.path.join(cfg.out, name)
    with open(path, "w") as fh:
        fh.write(json.dumps(clean_json(payload), indent=2, sort_keys=True) + "\n")
    return path


def _table(cfg):
    ex = cfg.section("exponent")
    return exponent.exponent_table(cfg.model, ex.get("rho_min", 1e-3),
                                   ex.get("rho_max", 1e8), ex.get("n_points", 1024))


def _verdict_exit(verdict):
    return {Verdict.PASS: EXIT_OK, Verdict.FAIL: EXIT_FAIL,
            Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[verdict]


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_exponent(cfg):
    ex = cfg.section("exponent")
    table = _table(cfg)
    ts = ex.get("t")
    if ts is None:
        ts = exponent.default_t_grid(table)
    scales = [exponent.h_of_t(table, float(t)) for t in ts]
    evals = []
    if "eval_rho" in ex:
        rho = ex["eval_rho"]
        if rho.min() < table.rho_min or rho.max() > table.rho_max:
            raise RangeError(
                f"exponent.eval_rho must lie in the table range "
                f"[{table.rho_min:g}, {table.rho_max:g}]; adjust exponent.rho_min/rho_max")
        evals = [{"rho": float(r), "re_phi": float(table.phi(float(r))),
                  "psi": float(table.psi_at(float(r)))} for r in rho]
    if "csv" in cfg.emit:
        table.to_csv(os.path.join(cfg.out, "exponent.csv"))
        with open(os.path.join(cfg.out, "timescale.csv"), "w") as fh:
            fh.write("t,h\n")
            for s in scales:
                fh.write(f"{s.t:.17g},{s.h:.17g}\n")
    _write_json(cfg, "exponent.json", {
        "model": cfg.model.to_dict(), "rho_min": table.rho_min,
        "rho_max": table.rho_max, "n_points": int(table.radii.size),
        "timescale": [{"t": s.t, "h": s.h} for s in scales], "evaluations": evals,
        "version": __version__})
    if "svg" in cfg.emit:
        loglog_svg([("Re Phi", table.radii, table.re_phi), ("Psi", table.radii, table.psi)],
                   "characteristic exponent", "log10 rho", "log10 value",
                   os.path.join(cfg.out, "exponent.svg"))
    return EXIT_OK


def _condition_report(cfg, cond):
    m = cfg.model
    sec = cfg.section("check")
    r0 = sec.get("r0", 1.0)
    if cond == "F":
        p = m.profile
        fc = convolution.classify_F(m.d, p.m, p.beta, p.delta)
        rep = ConditionReport("F", fc.verdict, None, [], {},
                              {"case": fc.case, "reason": fc.reason})
        payload = rep.to_dict()
        payload.update(fc.to_dict())
        return rep, payload
    if cond == "31":
        rep = convolution.check_condition_31(m, r0, sec.get("x_probes"))
    elif cond == "C":
        rep = convolution.check_condition_C(m, r0, sec.get("x_probes"), sec.get("r_probes"))
    elif cond == "P":
        rep = convolution.check_condition_P(m, r0, sec.get("s_probes"), sec.get("r_probes"))
    elif cond == "E":
        rep = exponent.check_condition_E(m, _table(cfg), sec.get("t_grid"))
    elif cond == "21":
        rep = exponent.check_condition_21(m, _table(cfg), r0)
    else:
        rep = exponent.check_weak_scaling(_table(cfg))[2]
    return rep, rep.to_dict()


def cmd_check(cfg, cond):
    rep, payload = _condition_report(cfg, cond)
    _write_json(cfg, f"check_{cond}.json", payload)
    if rep.grid:
        if "csv" in cfg.emit:
            with open(os.path.join(cfg.out, f"check_{cond}.csv"), "w") as fh:
                fh.write("x,ratio\n")
                for g in rep.grid:
                    fh.write(f"{g['x']:.17g},{g['ratio']:.17g}\n")
        if "svg" in cfg.emit:
            loglog_svg([(cond, [g["x"] for g in rep.grid], [g["ratio"] for g in rep.grid])],
                       f"condition {cond}", "log10 probe", "log10 ratio",
                       os.path.join(cfg.out, f"check_{cond}.svg"))
    print(f"{cond}: {rep.verdict.value}")
    return _verdict_exit(rep.verdict)


def cmd_density(cfg, t, method):
    m = cfg.model
    sec = cfg.section("density")
    t = sec.get("t") if t is None else t
    if t is None:
        raise UsageError("density needs --t or density.t in the config")
    t = _number(t, "t", positive=True)
    table = _table(cfg)
    override = sec.get("override_E", False)
    xg = sec.get("x_grid")
    if method == "split":
        p = density.density_split(m, table, t, x_grid=xg, r=sec.get("r"), override=override)
    else:
        if xg is None and m.d > 1:
            h = exponent.h_of_t(table, t).h
            xg = np.linspace(0.0, 10.0 * h, 101)
        p = density.density_fourier(m, table, t, x_grid=xg, override=override)
    if "csv" in cfg.emit:
        p.to_csv(os.path.join(cfg.out, "density.csv"))
    meta = p.metadata()
    meta["model"] = m.to_dict()
    _write_json(cfg, "density.json", meta)
    if "svg" in cfg.emit:
        pos = p.x > 0
        loglog_svg([(f"p_t, t={t:g}", p.x[pos], p.values[pos])], "transition density",
                   "log10 x", "log10 p", os.path.join(cfg.out, "density.svg"))
    return EXIT_OK


def cmd_verify(cfg, thm, t):
    m = cfg.model
    sec = cfg.section("verify")
    tg = sec.get("t_grid")
    r0 = sec.get("r0", 1.0)
    if thm == "dichotomy":
        kappa, crit, sub = bounds.default_dichotomy_pair(m.d)
        crit = sec.get("critical", crit)
        sub = sec.get("subcritical", sub)
        t = sec.get("t", 0.1) if t is None else _number(t, "t", positive=True)
        rep = bounds.dichotomy_experiment(crit.profile.kappa, crit.d, t, crit, sub,
                                          sec.get("window", (5.0, 20.0)))
        code = rep.verdict.exit_code
        series = [(k, part["x"], part["ratio"]) for k, part in
                  (("critical", rep.critical), ("subcritical", rep.subcritical))]
    else:
        table = bounds.bound_table(m)
        if t is not None:
            tg = [_number(t, "t", positive=True)]
        if thm == "t12":
            rep = bounds.verify_theorem_12(m, tg, sec.get("theta"), table, r0)
        elif thm == "t13":
            rep = bounds.verify_theorem_13(m, tg, table, r0)
        elif thm == "minform":
            rep = bounds.verify_min_form(m, tg, table)
        else:
            rep = bounds.verify_theorem_14(m, tg, r0, table)
        code = _verdict_exit(rep.verdict)
        series = [(f"t={c['t']:.3g}", c["x"], c["ratio"]) for c in rep.curves]
    payload = rep.to_dict()
    payload["model"] = m.to_dict()
    _write_json(cfg, f"verify_{thm}.json", payload)
    if "csv" in cfg.emit:
        rep.curves_csv(os.path.join(cfg.out, f"verify_{thm}.csv"))
    if "svg" in cfg.emit:
        loglog_svg(series, f"far-field ratio ({thm})", "log10 |x|", "log10 ratio",
                   os.path.join(cfg.out, f"verify_{thm}.svg"))
    print(f"{thm}: {rep.verdict.value}")
    return code


def cmd_convolve(cfg):
    m = cfg.model
    sec = cfg.section("convolve")
    r = sec.get("r", 1.0)
    dx = sec.get("dx", 0.01)
    x_max = sec.get("x_max", 20.0)
    n_max = sec.get("n_max", 4)
    if not x_max > r:
        raise ValidationError("convolve.x_max must exceed convolve.r", "convolve.x_max")
    meas = convolution.truncated_measure(m, r, dx, x_max)
    powers = []
    for n in range(1, n_max + 1):
        cp = convolution.conv_power(meas, n)
        expect = meas.mass ** n
        powers.append({"n": n, "mass": cp.mass, "expected": expect,
                       "rel_error": abs(cp.mass / expect - 1.0)})
        if "csv" in cfg.emit:
            cp.to_csv(os.path.join(cfg.out, f"convpower_{n}.csv"))
    _write_json(cfg, "convolve.json", {
        "model": m.to_dict(), "r": r, "dx": dx, "x_max": x_max,
        "measure_mass": meas.mass, "exact_mass": meas.total_exact,
        "leak": meas.leak, "tail_mass_beyond_box": tail_mass(m, x_max),
        "powers": powers})
    return EXIT_OK


# ----------------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="model configuration (JSON)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--emit", default="csv,json", help="comma list of csv,json,svg")
    common.add_argument("--t", default=None, type=float, help="time")
    common.add_argument("--method", default="fourier", choices=("fourier", "split"))
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="levyk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"levyk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("exponent", parents=[common], help="exponent table and h(t)")
    pc = sub.add_parser("check", parents=[common], help="condition checkers")
    pc.add_argument("condition", choices=CONDITIONS)
    sub.add_parser("density", parents=[common], help="transition density on a grid")
    pv = sub.add_parser("verify", parents=[common], help="bound checks")
    pv.add_argument("theorem", choices=THEOREMS)
    sub.add_parser("convolve", parents=[common], help="convolution powers")
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        emit = parse_emit(args.emit)
        os.makedirs(args.out, exist_ok=True)
        cfg = load_config(args.config, args.out, emit)
        if args.command == "exponent":
            return cmd_exponent(cfg)
        if args.command == "check":
            return cmd_check(cfg, args.condition)
        if args.command == "density":
            return cmd_density(cfg, args.t, args.method)
        if args.command == "verify":
            return cmd_verify(cfg, args.theorem, args.t)
        return cmd_convolve(cfg)
    except (UsageError, ValidationError, RangeError) as exc:
        field_name = getattr(exc, "field", None)
        hint = f" [field: {field_name}]" if field_name else ""
        print(f"levyk: error: {exc}{hint}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionFailed as exc:
        print(f"levyk: precondition ({exc.condition}) failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericFailure, BoxTooSmall) as exc:
        print(f"levyk: numeric failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
