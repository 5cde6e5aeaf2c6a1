import math

import numpy as np
import pytest
from scipy.special import gamma

from conftest import pure_log, relativistic
from levyk import (Flag, KappaClass, LevyModel, LogSymbol, Method, PreconditionFailed,
                   SmallJumpSymbol, ValidationError, density_fourier, density_split,
                   exponent_table, h_of_t, small_jump_density, tail_mass)
from levyk.density import fourier_point_radial, split_parts, tail_decay_fit
from levyk.exponent import small_jump_exponent
from levyk.profiles import sphere_area


class LinearSymbol:
    """Phi(rho) = k rho: the Cauchy law of scale t k."""

    integrable = True

    def __init__(self, k):
        self.k = k

    def __call__(self, rho):
        return self.k * np.asarray(rho, dtype=float)


def cauchy(d, a, r):
    return gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2) * a / (a * a + r * r) ** ((d + 1) / 2)


@pytest.fixture(scope="module")
def rel_fourier(rel_model, rel_table):
    return density_fourier(rel_model, rel_table, 0.1)


@pytest.fixture(scope="module")
def rel_split(rel_model, rel_table):
    return density_split(rel_model, rel_table, 0.1)


def test_cauchy_1d_pointwise():
    model = relativistic()
    xs = np.array([0.0, 0.05, 0.3, 2.0])
    g = density_fourier(model, None, 0.2, xs, symbol=LinearSymbol(1.5), pointwise=True)
    assert np.allclose(g.values, cauchy(1, 0.3, xs), rtol=1e-7)


def test_cauchy_1d_grid():
    model = relativistic()
    xs = 0.01 * np.arange(-200, 201)
    g = density_fourier(model, None, 0.2, xs, symbol=LinearSymbol(1.5))
    # periodisation of the heavy tail is the only error of the FFT path;
    # it grows with |x| and is flagged beyond the near field
    ok = g.accurate()
    assert np.all(ok == (np.abs(xs) <= 5 * g.meta["h"]))
    want = cauchy(1, 0.3, xs)
    assert g.values[200] == pytest.approx(want[200], rel=1e-3)
    assert np.allclose(g.values[ok], want[ok], rtol=5e-3)
    assert np.allclose(g.values, want, rtol=1e-2)


@pytest.mark.parametrize("d", [2, 3])
def test_cauchy_radial(d):
    a = 0.4
    for r in (0.0, 0.1, 0.7, 3.0):
        got = fourier_point_radial(LinearSymbol(2.0), 0.2, d, r)
        assert got == pytest.approx(cauchy(d, a, r), rel=1e-6)


def test_radial_density_grid_d2():
    model = LevyModel.create(2, KappaClass.poly_log(1.0, 0.0), 0.0, 1.0, 3.0)
    xs = np.array([0.0, 0.2, 1.0])
    g = density_fourier(model, None, 0.1, xs, symbol=LinearSymbol(math.pi / 2))
    assert np.allclose(g.values, cauchy(2, 0.1 * math.pi / 2, xs), rtol=1e-6)


def test_fourier_mass_symmetry_positivity(rel_fourier):
    g = rel_fourier
    assert g.method is Method.FOURIER
    assert g.mass() == pytest.approx(1.0, abs=5e-4)
    assert np.all(g.values >= 0.0)
    assert np.allclose(g.values, g.values[::-1], rtol=1e-10, atol=1e-14 * g.values.max())


def test_split_mass_positivity(rel_split):
    g = rel_split
    assert g.method is Method.SPLIT
    assert g.mass() == pytest.approx(1.0, abs=5e-4)
    far = np.abs(g.x) > 10 * g.meta["h"]
    assert np.all(g.values[far & (g.err_flags & Flag.BOX_EDGE == 0)] > 0.0)
    budget = g.meta["error_budget"]
    assert budget["series_leftover"] <= 1e-8


def test_methods_agree_near_field(rel_fourier, rel_split):
    h = rel_fourier.meta["h"]
    sel = np.abs(rel_fourier.x) <= 5 * h
    q = rel_split.at(rel_fourier.x[sel])
    gap = np.abs(q / rel_fourier.values[sel] - 1)
    assert gap.max() <= 1e-2


def test_split_far_field_tracks_levy_density(rel_split, rel_model):
    g = rel_split
    sel = (g.x >= 4.0) & (g.x <= 20.0) & g.accurate()
    ratio = g.values[sel] / (0.1 * rel_model.profile(g.x[sel]))
    assert 0.2 < ratio.min() and ratio.max() < 5.0


def test_monotone_tail(rel_split):
    g = rel_split
    sel = (g.x > 0) & g.accurate() & (g.values > 0)
    assert np.all(np.diff(g.values[sel]) <= 1e-12 * g.values.max())


def test_drift_shift():
    model = LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 1.25, b=[2.0])
    table = exponent_table(model)
    t = 0.1
    plain = density_fourier(model, table, t)
    centred = density_fourier(model, table, t, x_grid=plain.x - t * 2.0, centered=True)
    assert np.allclose(plain.values, centred.values, rtol=1e-9, atol=1e-15)
    peak = plain.x[np.argmax(plain.values)]
    assert peak == pytest.approx(t * 2.0, abs=plain.dx)


def test_condition_E_gate():
    model = pure_log()
    table = exponent_table(model)
    with pytest.raises(PreconditionFailed):
        density_fourier(model, table, 0.1)
    with pytest.raises(PreconditionFailed):
        density_split(model, table, 0.1)


def test_geometric_stable_slope():
    xs = np.geomspace(1e-3, 1e-2, 12)
    g = density_fourier(relativistic(), None, 0.2, xs, symbol=LogSymbol(1.0))
    slope = float(np.polyfit(np.log(xs), np.log(g.values), 1)[0])
    assert slope == pytest.approx(-0.8, abs=0.05)


def test_density_validation(rel_model, rel_table):
    with pytest.raises(ValidationError):
        density_fourier(rel_model, rel_table, 0.0)
    with pytest.raises(ValidationError):
        density_split(rel_model, rel_table, -1.0)
    with pytest.raises(ValidationError):
        LogSymbol(3.0)


# ----------------------------------------------------------------------------
# small jumps


def test_small_jump_symbol_matches_quadrature(rel_model):
    sym = SmallJumpSymbol(rel_model, 0.05)
    rho = np.array([0.5, 30.0, 700.0, 2e4])
    want = np.array([small_jump_exponent(rel_model, 0.05, r) for r in rho])
    assert np.allclose(sym(rho), want, rtol=1e-8)
    drho = 7.3
    grid = sym.uniform(drho, 50)
    assert np.allclose(grid, sym(drho * np.arange(50)), rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("r", [0.01, 0.05])
def test_small_jump_density_mass(rel_model, r):
    g = small_jump_density(rel_model, 0.1, r)
    assert g.mass() == pytest.approx(1.0, abs=5e-4)
    assert np.all(g.values >= 0.0)


def test_small_jump_peak_scale(rel_model, rel_table):
    prods = []
    for t in np.geomspace(1e-3, 1e-2, 4):
        h = h_of_t(rel_table, t).h
        g = small_jump_density(rel_model, t, h)
        prods.append(float(g.values[g.x.size // 2]) * h)
    assert 1 / 20 <= min(prods) and max(prods) <= 20


def test_small_jump_superpolynomial_decay(rel_model, rel_table):
    t = 0.01
    h = h_of_t(rel_table, t).h
    g = small_jump_density(rel_model, t, h, dx=h / 32)
    assert tail_decay_fit(g, h) < -0.1


def test_split_parts_invariants(rel_model, rel_table):
    parts = split_parts(rel_model, rel_table, 0.1)
    assert parts.small_info["mass"] == pytest.approx(1.0, abs=5e-4)
    assert parts.large.total == pytest.approx(1.0, abs=1e-6)
    assert parts.r == pytest.approx(h_of_t(rel_table, 0.1).h)


def test_first_series_term_dominates_far_field():
    # at tiny t and a fixed splitting radius the far field is the n = 1 term
    # e^{-t |nu_r|} t (nu_r * p_small); alpha1 = 1.5 keeps h(1e-3) near 1e-2
    # so the grid stays desk-sized
    model = LevyModel.create(1, KappaClass.poly_log(1.5, 0.0), 1.0, 1.0, 2.0)
    table = exponent_table(model)
    t = 1e-3
    kw = dict(r=1.0, centered=True, x_extent=30.0)
    full = density_split(model, table, t, **kw)
    one = density_split(model, table, t, n_max=1, **kw)
    sel = (full.x >= 4.0) & (full.x <= 15.0)
    assert np.allclose(one.values[sel], full.values[sel], rtol=2e-2)
    ratio = full.values[sel] / (t * model.profile(full.x[sel]))
    assert np.all(np.abs(ratio - 1) < 0.05)


def test_oversized_box_is_refused(rel_model, rel_table):
    from levyk import NumericFailure
    with pytest.raises(NumericFailure):
        density_split(rel_model, rel_table, 1e-3, x_extent=30.0)


def test_plateau_height_bounded(rel_model, rel_table):
    heights = []
    for t in (0.02, 0.05, 0.1, 0.2):
        g = density_split(rel_model, rel_table, t, centered=True)
        heights.append(g.values.max() * g.meta["h"])
    assert max(heights) / min(heights) < 5


def test_semigroup_identity_kernel(rel_split):
    # convolving with a unit point mass on the grid is the identity
    from levyk.convolution import grid_convolve
    delta = np.array([0.0, 1.0, 0.0])
    again, _ = grid_convolve(rel_split.values, delta)
    assert np.array_equal(again, rel_split.values)


def test_density_csv_and_json(tmp_path, rel_split):
    import json
    rel_split.to_csv(tmp_path / "d.csv")
    head = (tmp_path / "d.csv").read_text().splitlines()[:2]
    assert head[0] == "x,p,method,err_flag"
    assert head[1].split(",")[2] == "SPLIT"
    meta = json.loads(rel_split.to_json())
    assert meta["method"] == "SPLIT" and meta["drift_convention"] == "x"


def test_split_budget_records_box_mass(rel_model, rel_table):
    g = density_split(rel_model, rel_table, 0.1, x_extent=40.0)
    want = 0.1 * tail_mass(rel_model, 40.0)
    assert g.meta["error_budget"]["jump_mass_beyond_box"] == pytest.approx(want)


def test_sphere_factor_consistency():
    assert sphere_area(1) * 0.5 == 1.0
