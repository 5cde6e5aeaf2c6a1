import json
import math
import xml.etree.ElementTree as ET
from enum import Enum

import numpy as np
import pytest

from levyk.reports import ConditionReport, Verdict, clean_json, growth_verdict
from levyk.svg import HEIGHT, WIDTH, loglog_svg

U = np.linspace(0.0, 4.0, 16)


def test_flat_ratio_passes():
    v, st = growth_verdict(U, np.full(U.size, 2.0))
    assert v is Verdict.PASS and st["slope"] == pytest.approx(0.0, abs=1e-12)


def test_growing_ratio_fails():
    v, st = growth_verdict(U, np.exp(0.3 * U))
    assert v is Verdict.FAIL and st["slope"] == pytest.approx(0.3)


def test_intermediate_slope_is_inconclusive():
    v, _ = growth_verdict(U, np.exp(0.12 * U))
    assert v is Verdict.INCONCLUSIVE


def test_only_upper_half_counts():
    r = np.where(U < 2.0, np.exp(U), math.e ** 2)
    assert growth_verdict(U, r)[0] is Verdict.PASS


def test_decay_and_two_sided():
    r = np.exp(-0.5 * U)
    assert growth_verdict(U, r)[0] is Verdict.PASS
    assert growth_verdict(U, r, two_sided=True)[0] is Verdict.FAIL


def test_wide_spread_is_not_a_pass():
    r = np.ones(U.size)
    r[-3] = 50.0
    v, st = growth_verdict(U, r, pass_slope=10.0, fail_slope=20.0)
    assert st["spread"] >= 10 and v is Verdict.INCONCLUSIVE


def test_bad_ratios():
    assert growth_verdict(U[:3], [1.0, math.inf, 1.0])[0] is Verdict.FAIL
    assert growth_verdict(U[:3], [1.0, 0.0, 1.0])[0] is Verdict.FAIL
    v, st = growth_verdict([], [])
    assert v is Verdict.INCONCLUSIVE and st["reason"] == "no probes"


def test_unordered_samples_are_sorted():
    order = np.random.default_rng(1).permutation(U.size)
    assert growth_verdict(U[order], np.exp(0.3 * U)[order])[1]["slope"] == pytest.approx(0.3)


def test_exit_codes():
    assert [v.exit_code for v in Verdict] == [0, 1, 3]


class Colour(Enum):
    RED = "red"


def test_clean_json():
    data = clean_json({"a": np.float64(1.5), "b": np.arange(3), "c": (math.nan, math.inf),
                       "d": Colour.RED, "e": np.bool_(True), 3: np.int64(4), "f": None})
    assert data == {"a": 1.5, "b": [0, 1, 2], "c": [None, None], "d": "red", "e": True,
                    "3": 4, "f": None}
    json.dumps(data, allow_nan=False)


def test_condition_report_nonfinite():
    rep = ConditionReport("C", Verdict.FAIL, math.inf, [{"x": 2.0, "ratio": math.nan}])
    data = json.loads(rep.to_json())
    assert data["sup_ratio"] is None and data["grid"] == [{"x": 2.0, "ratio": None}]


def test_svg_document(tmp_path):
    x = np.geomspace(1, 1e3, 20)
    text = loglog_svg([("a<b", x, x ** 2), ("neg", [1, 2], [-1, -2])], "title & more",
                      path=tmp_path / "p.svg")
    assert (tmp_path / "p.svg").read_text() == text
    root = ET.fromstring(text)
    ns = "{http://www.w3.org/2000/svg}"
    lines = root.findall(f"{ns}polyline")
    # the all-negative series has no drawable points
    assert len(lines) == 1
    pts = np.array([p.split(",") for p in lines[0].get("points").split()], dtype=float)
    assert np.all((pts[:, 0] >= 0) & (pts[:, 0] <= WIDTH))
    assert np.all((pts[:, 1] >= 0) & (pts[:, 1] <= HEIGHT))
    labels = [t.text for t in root.findall(f"{ns}text")]
    assert "a<b" in labels and "title & more" in labels
    assert "0" in labels and "3" in labels


def test_svg_empty_and_constant():
    ET.fromstring(loglog_svg([]))
    ET.fromstring(loglog_svg([("c", [1, 10], [5, 5])]))
