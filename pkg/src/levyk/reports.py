"""Report containers and the verdict rule shared by all checkers."""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Verdict(Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def exit_code(self):
        return {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 3}[self.value]


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def growth_verdict(u, ratios, pass_slope=0.1, fail_slope=0.15, band=10.0,
                   two_sided=False):
    """Classify a ratio curve sampled along an increasing variable u.

    The statistic is the least-squares slope of log(ratio) against u over
    the upper half of the samples. PASS needs slope <= pass_slope and a
    max/median spread below ``band`` on that half; FAIL needs
    slope >= fail_slope or a non-finite ratio; anything else is
    INCONCLUSIVE. With ``two_sided`` the absolute slope is used.
    """
    u = np.asarray(u, dtype=float)
    r = np.asarray(ratios, dtype=float)
    thresholds = {"pass_slope": pass_slope, "fail_slope": fail_slope,
                  "band": band, "two_sided": two_sided}
    stats = {"thresholds": thresholds}
    if r.size == 0:
        stats["reason"] = "no probes"
        return Verdict.INCONCLUSIVE, stats
    if not np.all(np.isfinite(r)) or np.any(r <= 0.0):
        stats["reason"] = "non-finite or non-positive ratio"
        return Verdict.FAIL, stats
    order = np.argsort(u)
    u, r = u[order], r[order]
    half = max(2, r.size // 2)
    uu, lr = u[-half:], np.log(r[-half:])
    slope = float(np.polyfit(uu, lr, 1)[0]) if np.ptp(uu) > 0 else 0.0
    spread = float(np.max(r[-half:]) / np.median(r[-half:]))
    stat = abs(slope) if two_sided else slope
    stats.update(slope=slope, spread=spread)
    if stat >= fail_slope:
        return Verdict.FAIL, stats
    if stat <= pass_slope and spread < band:
        return Verdict.PASS, stats
    return Verdict.INCONCLUSIVE, stats


@dataclass
class ConditionReport:
    condition: str
    verdict: Verdict
    sup_ratio: float
    grid: list
    thresholds: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "sup_ratio": _num(self.sup_ratio),
            "grid": [{"x": _num(g["x"]), "ratio": _num(g["ratio"])}
                     for g in self.grid],
            "thresholds": _clean(self.thresholds),
            "diagnostics": _clean(self.diagnostics),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _clean(obj):
    """Make nested data JSON-safe: numpy scalars, enums, non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


clean_json = _clean
