"""Radial Levy-density profiles and quantities that depend on them only.

A profile is f(s) = kappa(s) on (0, 1] and c * exp(-m s^beta) s^(-delta)
on (1, inf). The Levy density of a model is g(x) = f(|x|).
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.integrate import quad
from scipy.special import gamma

from .errors import NumericFailure, ValidationError
from .quadrature import log_quad

LOG2 = math.log(2.0)


def sphere_area(d):
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


class KappaVariant(Enum):
    PURE_LOG = "PURE_LOG"
    POLY_LOG = "POLY_LOG"
    HIGH_INTENSITY = "HIGH_INTENSITY"


@dataclass(frozen=True)
class KappaClass:
    """Small-jump singularity class.

    PURE_LOG is r^-d, POLY_LOG is r^(-d-alpha1) log(1+1/r)^alpha2 and
    HIGH_INTENSITY is r^(-d-2) log(1+1/r)^-2. The exponents are stored
    in the common form (alpha1, alpha2) for every variant.
    """

    variant: KappaVariant
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        v = KappaVariant(self.variant)
        object.__setattr__(self, "variant", v)
        if v is KappaVariant.PURE_LOG:
            a1, a2 = 0.0, 0.0
        elif v is KappaVariant.HIGH_INTENSITY:
            a1, a2 = 2.0, -2.0
        else:
            a1, a2 = float(self.alpha1), float(self.alpha2)
            if not (math.isfinite(a1) and math.isfinite(a2)):
                raise ValidationError("kappa exponents must be finite", "kappa")
            if not (0.0 < a1 <= 2.0):
                raise ValidationError("alpha1 must lie in (0, 2]", "kappa.alpha1")
            if a1 == 2.0 and a2 >= -1.0:
                raise ValidationError(
                    "alpha1 = 2 needs alpha2 < -1 for a finite second moment",
                    "kappa.alpha2")
        object.__setattr__(self, "alpha1", a1)
        object.__setattr__(self, "alpha2", a2)

    @classmethod
    def pure_log(cls):
        return cls(KappaVariant.PURE_LOG)

    @classmethod
    def poly_log(cls, alpha1, alpha2=0.0):
        return cls(KappaVariant.POLY_LOG, alpha1, alpha2)

    @classmethod
    def high_intensity(cls):
        return cls(KappaVariant.HIGH_INTENSITY)

    def raw_log(self, r, d):
        """log of the unmonotonized formula, vectorised over r in (0, 1]."""
        r = np.asarray(r, dtype=float)
        out = -(d + self.alpha1) * np.log(r)
        if self.alpha2 != 0.0:
            out = out + self.alpha2 * np.log(np.log1p(1.0 / r))
        return out

    def turning_point(self, d):
        """Interior minimiser r* of the raw formula on (0, 1], or None.

        The log-derivative is (1/r) * (-(d + alpha1) + |alpha2| q(r)) with
        q(r) = 1 / ((1 + r) log(1 + 1/r)) increasing from 0 to 1/(2 log 2).
        """
        if self.alpha2 >= 0.0:
            return None
        need = (d + self.alpha1) / abs(self.alpha2)
        q = lambda r: 1.0 / ((1.0 + r) * math.log1p(1.0 / r))
        if q(1.0) <= need:
            return None
        return optimize.brentq(lambda r: q(r) - need, 1e-300, 1.0, xtol=1e-300,
                               rtol=1e-15)

    def log_scalar(self, r, d, turning=None):
        """Fast scalar version of log_value; ``turning`` caches r*."""
        if turning is not None and r > turning:
            r = turning
        out = -(d + self.alpha1) * math.log(r)
        if self.alpha2 != 0.0:
            out += self.alpha2 * math.log(math.log1p(1.0 / r))
        return out

    def log_value(self, r, d):
        """log of the stored (nonincreasing) kappa on (0, 1]."""
        rs = self.turning_point(d)
        if rs is not None:
            r = np.minimum(r, rs)
        return self.raw_log(r, d)

    def value(self, r, d):
        return np.exp(self.log_value(r, d))

    def to_dict(self):
        out = {"variant": self.variant.value}
        if self.variant is KappaVariant.POLY_LOG:
            out.update(alpha1=self.alpha1, alpha2=self.alpha2)
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValidationError("kappa must be an object", "kappa")
        if "variant" not in data:
            raise ValidationError("missing field kappa.variant", "kappa.variant")
        try:
            variant = KappaVariant(str(data["variant"]).upper())
        except ValueError:
            raise ValidationError(
                f"unknown kappa.variant {data['variant']!r}", "kappa.variant")
        if variant is KappaVariant.POLY_LOG:
            if "alpha1" not in data:
                raise ValidationError("missing field kappa.alpha1", "kappa.alpha1")
            return cls(variant, float(data["alpha1"]), float(data.get("alpha2", 0.0)))
        return cls(variant)


@dataclass(frozen=True)
class ProfileSpec:
    """Profile parameters. ``d`` is carried because kappa depends on it."""

    kappa: KappaClass
    m: float
    beta: float
    delta: float
    c: float = None
    d: int = 1

    def __post_init__(self):
        d = int(self.d)
        if d < 1:
            raise ValidationError("d must be a positive integer", "d")
        object.__setattr__(self, "d", d)
        m, beta, delta = float(self.m), float(self.beta), float(self.delta)
        for name, val in (("m", m), ("beta", beta), ("delta", delta)):
            if not math.isfinite(val):
                raise ValidationError(f"{name} must be finite", name)
        if m < 0.0:
            raise ValidationError("m must be >= 0", "m")
        if beta <= 0.0:
            raise ValidationError("beta must be > 0", "beta")
        if m == 0.0 and not delta > d:
            raise ValidationError("m = 0 needs delta > d", "delta")
        if delta < 0.0:
            raise ValidationError("delta must be >= 0", "delta")
        c_max = self.kappa_at_one * math.exp(m)
        c = c_max if self.c is None else float(self.c)
        if not (0.0 < c <= c_max * (1.0 + 1e-12)):
            raise ValidationError(
                f"c must lie in (0, kappa(1) e^m] = (0, {c_max:.6g}]", "c")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "c", min(c, c_max))

    @property
    def kappa_at_one(self):
        return float(self.kappa.value(1.0, self.d))

    def log_tail(self, s):
        s = np.asarray(s, dtype=float)
        return math.log(self.c) - self.m * s ** self.beta - self.delta * np.log(s)

    def log_eval(self, s):
        """log f(s), vectorised; stays finite where f underflows."""
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0.0):
            raise ValidationError("profile is defined for s > 0 only", "s")
        small = s <= 1.0
        out = np.empty_like(s)
        out[small] = self.kappa.log_value(s[small], self.d)
        out[~small] = self.log_tail(s[~small])
        return out if out.ndim else float(out)

    def __call__(self, s):
        return np.exp(self.log_eval(s))

    @cached_property
    def _turning(self):
        return self.kappa.turning_point(self.d)

    def scalar(self, s):
        """f(s) for a single float s > 0, without numpy overhead."""
        if s <= 1.0:
            return math.exp(self.kappa.log_scalar(s, self.d, self._turning))
        return self.c * math.exp(-self.m * s ** self.beta) * s ** -self.delta


def profile_eval(p, s):
    """f(s) for a profile; rejects s <= 0."""
    return p(s)


@dataclass(frozen=True)
class LevyModel:
    d: int
    profile: ProfileSpec
    b: tuple = field(default=None)

    def __post_init__(self):
        if int(self.d) != self.profile.d:
            raise ValidationError("model and profile disagree on d", "d")
        object.__setattr__(self, "d", int(self.d))
        b = (0.0,) * self.d if self.b is None else tuple(float(v) for v in self.b)
        if len(b) != self.d:
            raise ValidationError(f"b must have {self.d} entries", "b")
        object.__setattr__(self, "b", b)
        self._validate_moments()

    def _validate_moments(self):
        m2 = small_jump_second_moment(self, 1.0)
        if not (math.isfinite(m2) and m2 > 0.0):
            raise ValidationError("small-jump second moment is not finite", "kappa")

    @cached_property
    def omega(self):
        return sphere_area(self.d)

    @classmethod
    def create(cls, d, kappa, m, beta, delta, c=None, b=None):
        return cls(d, ProfileSpec(kappa, m, beta, delta, c, d), b)

    def with_tail(self, **changes):
        p = self.profile
        kw = dict(kappa=p.kappa, m=p.m, beta=p.beta, delta=p.delta, c=None, d=p.d)
        kw.update(changes)
        return LevyModel(self.d, ProfileSpec(**kw), self.b)

    def to_dict(self):
        p = self.profile
        return {"d": self.d, "kappa": p.kappa.to_dict(), "m": p.m,
                "beta": p.beta, "delta": p.delta, "c": p.c, "b": list(self.b)}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValidationError("model config must be a JSON object")
        for key in ("d", "kappa", "m", "beta", "delta"):
            if key not in data:
                raise ValidationError(f"missing field {key}", key)
        kappa = KappaClass.from_dict(data["kappa"])
        try:
            d = int(data["d"])
            vals = {k: float(data[k]) for k in ("m", "beta", "delta")}
            c = None if data.get("c") is None else float(data["c"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"non-numeric model field: {exc}")
        return cls.create(d, kappa, c=c, b=data.get("b"), **vals)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config is not valid JSON: {exc}")
        return cls.from_dict(data.get("model", data))


def levy_density(model, x):
    """g(x) = f(|x|); x is a point of R^d (a scalar when d = 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != model.d:
        raise ValidationError(f"x must have {model.d} coordinates", "x")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValidationError("the Levy density is not defined at the origin", "x")
    return float(model.profile(r))


# ----------------------------------------------------------------------------
# Radial moments
# ----------------------------------------------------------------------------

def _tail_cutoff(p, a, margin=80.0):
    """Radius beyond which the tempered tail is below e^-margin of its
    value at max(a, 1)."""
    if p.m == 0.0:
        return math.inf
    base = max(a, 1.0)
    return ((p.m * base ** p.beta + margin) / p.m) ** (1.0 / p.beta)


def kappa_moment(p, power, s0):
    """Integral of s^power kappa(s) over (0, s0], s0 <= 1.

    When the integrand behaves like s^-1 times a power of log(1/s) the
    substitution w = log(1 + 1/s) is used; otherwise the log-variable
    integrand decays exponentially towards 0 and a window of finite
    length suffices.
    """
    k = p.kappa
    d = p.d
    rs = k.turning_point(d)
    expo = power - d - k.alpha1 + 1.0
    if expo < 0.0 or (expo == 0.0 and k.alpha2 >= -1.0):
        return math.inf
    total = 0.0
    hi = s0
    if rs is not None and s0 > rs:
        # Flat part of the monotonized kappa.
        kv = math.exp(float(k.raw_log(rs, d)))
        total += kv * (s0 ** (power + 1) - rs ** (power + 1)) / (power + 1)
        hi = rs
    if expo > 0.0:
        span = 60.0 / expo + 8.0
        lo = hi * math.exp(-span)
        f = lambda s: math.exp(power * math.log(s) + float(k.raw_log(s, d)))
        total += log_quad(f, lo, hi, rel_tol=1e-11, what="kappa moment")
        return total
    # expo == 0: integrand is s^-1 log(1 + 1/s)^alpha2.
    w0 = math.log1p(1.0 / hi)
    a2 = k.alpha2
    main = w0 ** (a2 + 1.0) / (-a2 - 1.0)
    rest, _ = quad(lambda w: w ** a2 * math.exp(-w) / -math.expm1(-w), w0, math.inf,
                   epsabs=0.0, epsrel=1e-12, limit=200)
    return total + main + rest


def radial_integral(model, power, a, b):
    """Integral of s^power f(s) over [a, b] with 0 <= a < b <= inf.

    Includes no sphere factor.
    """
    p = model.profile
    if b <= a:
        return 0.0
    total = 0.0
    if a == 0.0:
        lim = min(b, 1.0)
        total += kappa_moment(p, power, lim)
        a = lim
        if b <= a:
            return total
    f = lambda s: s ** power * float(p(s))
    if a < 1.0:
        hi = min(b, 1.0)
        total += log_quad(f, a, hi, rel_tol=1e-11, what="radial integral")
        a = hi
    if b <= a:
        return total
    hi = min(b, _tail_cutoff(p, a))
    if math.isinf(hi):
        # Pure power tail: closed form.
        e = power - p.delta + 1.0
        if e >= 0.0:
            return math.inf
        return total + p.c * a ** e / (-e)
    if hi > a:
        total += log_quad(f, a, hi, rel_tol=1e-11, what="radial integral")
    return total


def tail_mass(model, r):
    """Mass of the Levy measure outside the ball of radius r."""
    if not r > 0.0:
        raise ValidationError("r must be > 0", "r")
    val = model.omega * radial_integral(model, model.d - 1, r, math.inf)
    if not math.isfinite(val):
        raise NumericFailure("tail mass diverged", {"r": r})
    return val


def small_jump_second_moment(model, r):
    """Integral of |y|^2 over the ball of radius r against the Levy measure."""
    if not (0.0 < r <= 1.0):
        raise ValidationError("r must lie in (0, 1]", "r")
    return model.omega * radial_integral(model, model.d + 1, 0.0, r)
