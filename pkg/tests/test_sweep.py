from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modent.ensemble import BinnedCurve, EnsembleSpec, bin_energies, run_ensemble
from modent.errors import ConfigError
from modent.models import ModelParams
from modent.sweep import (
    Method,
    all_estimates,
    detect_mobility_edges,
    detect_transition,
    grid_seed,
    jump,
    local_maxima,
    linear_fit_departure,
    max_curvature,
    max_slope,
    mobility_edges_for,
    sweep_parameter,
)

GRID = np.round(np.arange(0.0, 4.0001, 0.1), 12)


def logistic(x, x0=2.0, w=0.3):
    return 1.0 / (1.0 + np.exp((x - x0) / w))


# --- transition estimators --------------------------------------------------


def test_step_at_midpoint():
    y = np.where(GRID < 2.05, 1.6, 0.2)
    est = detect_transition(GRID, y)
    assert est.method is Method.JUMP
    assert est.location == pytest.approx(2.05)
    assert est.uncertainty == pytest.approx(0.1)


def test_logistic_max_slope():
    est = max_slope(GRID, logistic(GRID, 1.93))
    assert abs(est.location - 1.93) <= 0.1


def test_smooth_curve_falls_back_to_curvature():
    y = logistic(GRID, 2.0, 0.6)
    assert jump(GRID, y) is None
    est = detect_transition(GRID, y)
    assert est.method is Method.MAX_CURVATURE
    # a sigmoid bends hardest on its shoulders, +-w*ln(2+sqrt3) from the centre
    assert min(abs(est.location - 2.0 - 0.6 * 1.317), abs(est.location - 2.0 + 0.6 * 1.317)) <= 0.1


def test_flat_curve_has_no_transition():
    assert detect_transition(GRID, np.full(GRID.shape, 1.3)) is None
    y = 1.3 + 1e-3 * np.sin(GRID)
    assert detect_transition(GRID, y, stderr=np.full(GRID.shape, 1e-3)) is None
    assert all(v is None for v in all_estimates(GRID, y, np.full(GRID.shape, 1e-3)).values())


def test_needs_five_points():
    with pytest.raises(ValueError):
        detect_transition([0, 1, 2, 3], [0, 1, 0, 1])
    with pytest.raises(ValueError):
        detect_transition([0, 2, 1, 3, 4], [0, 1, 0, 1, 0])


def test_linear_fit_departure():
    x = GRID
    y = 1.5 - 0.1 * x
    y = np.where(x > 2.5, y - (x - 2.5) ** 2, y)
    est = linear_fit_departure(x, y, fit_below=1.5)
    assert est.method is Method.LINEAR_FIT
    assert 2.5 < est.location <= 2.7
    assert linear_fit_departure(x, 1.5 - 0.1 * x) is None


def test_max_curvature_on_slope_kink():
    assert max_curvature(GRID, np.abs(GRID - 1.3)).location == pytest.approx(1.3)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.5, 3.5),
    st.floats(0.05, 1.0),
    st.floats(-100, 100).filter(lambda a: abs(a) > 1e-3),
    st.floats(-100, 100),
)
def test_affine_invariance(x0, w, a, b):
    y = logistic(GRID, x0, w) + 0.3 * np.exp(-((GRID - 1.0) ** 2))
    for m in (None, Method.MAX_SLOPE, Method.MAX_CURVATURE, Method.JUMP):
        e1 = detect_transition(GRID, y, method=m)
        e2 = detect_transition(GRID, a * y + b, method=m)
        assert (e1 is None) == (e2 is None)
        if e1 is not None:
            assert e1.location == e2.location and e1.method == e2.method


# --- mobility edges ---------------------------------------------------------


def _curve(x, y):
    return BinnedCurve(np.asarray(x, float), np.asarray(y, float), np.zeros(len(x)), np.ones(len(x), int), N=100)


def _brute_edges(x, y, theta):
    # scan every neighbouring pair; keep the first upward and the last downward crossing
    lower = upper = None
    for i in range(len(x) - 1):
        if y[i] < theta <= y[i + 1] and lower is None and not np.any(y[: i + 1] >= theta):
            lower = x[i] + (theta - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i])
        if y[i] >= theta > y[i + 1] and not np.any(y[i + 1 :] >= theta):
            upper = x[i] + (theta - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i])
    return lower, upper


def test_plateau_edges():
    x = np.linspace(-2.5, 2.5, 101)
    y = np.where(np.abs(x) < 1.6, 1.6, 0.1)
    e = detect_mobility_edges(_curve(x, y))
    assert e.lower_edge == pytest.approx(-1.6, abs=0.05) and e.upper_edge == pytest.approx(1.6, abs=0.05)
    assert e.lower_edge <= e.upper_edge and e.threshold == 0.8 and e.N == 100


def test_constant_curves_have_no_edges():
    x = np.linspace(-1, 1, 20)
    for level in (1.6, 0.1):
        e = detect_mobility_edges(_curve(x, np.full(20, level)))
        assert e.lower_edge is None and e.upper_edge is None


def test_one_sided_spectrum_has_single_lower_edge():
    x = np.linspace(-3, 3, 40)
    e = detect_mobility_edges(_curve(x, 0.2 + 1.4 / (1 + np.exp(-(x - 1.0) / 0.2))))
    assert e.upper_edge is None
    assert e.lower_edge == pytest.approx(1.0, abs=0.1)


def test_empty_bins_are_skipped():
    x = np.linspace(-2.5, 2.5, 40)
    y = np.where(np.abs(x) < 1.0, 1.6, 0.1)
    counts = np.ones(40, int)
    counts[::3] = 0
    y = np.where(counts > 0, y, np.nan)
    e = detect_mobility_edges(BinnedCurve(x, y, np.zeros(40), counts))
    assert e.lower_edge is not None and e.upper_edge is not None


def test_too_few_bins():
    with pytest.raises(ValueError):
        detect_mobility_edges(_curve(np.arange(10.0), np.ones(10)))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 2), min_size=16, max_size=60), st.floats(0.6, 1.0))
def test_edges_match_brute_force_scan(values, theta):
    y = np.array(values)
    x = np.linspace(-2, 2, y.shape[0])
    e = detect_mobility_edges(_curve(x, y), theta)
    lo, hi = _brute_edges(x, y, theta)
    assert (e.lower_edge is None) == (lo is None) and (e.upper_edge is None) == (hi is None)
    if lo is not None:
        assert e.lower_edge == pytest.approx(lo, abs=1e-12)
    if hi is not None:
        assert e.upper_edge == pytest.approx(hi, abs=1e-12)
    if lo is not None and hi is not None:
        assert e.lower_edge <= e.upper_edge


def test_dimer_edges_are_advisory():
    spec = EnsembleSpec(ModelParams("random_dimer", 40, Va=2.0))
    curve = bin_energies(np.linspace(-2, 2, 40), np.linspace(0, 2, 40), 20)
    assert mobility_edges_for(spec, curve).advisory
    spec = EnsembleSpec(ModelParams("long_range_correlated", 40, alpha=2.0))
    assert not mobility_edges_for(spec, curve).advisory


# --- sweeps -----------------------------------------------------------------


def test_grid_seed_is_stable_and_distinct():
    assert grid_seed(7, 3) == grid_seed(7, 3)
    assert len({grid_seed(7, i) for i in range(100)}) == 100
    assert 0 <= grid_seed(2**64 - 1, 0) < 2**64


def test_small_sweep():
    base = EnsembleSpec(ModelParams("random_dimer", 20, Va=1.5, seed=3), samples=4, energy_bins=8)
    grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    res = sweep_parameter(base, "delta_v", grid, [10, 20])
    assert res.sizes == (10, 20)
    for n in res.sizes:
        assert res.means[n].shape == (6,) and len(res.per_N[n]) == 6
        assert res.samples[n] == 4
    # each grid point is reproducible on its own
    p = base.params.with_value("delta_v", 2.0)
    single = run_ensemble(replace(base, params=replace(p, N=20, seed=grid_seed(3, 3))))[1]
    assert single.mean == res.means[20][3]


def test_sweep_sample_mapping_and_errors():
    base = EnsembleSpec(ModelParams("long_range_hopping", 10, mu=1.5, seed=1), samples=2, energy_bins=8)
    res = sweep_parameter(base, "mu", [1.0, 1.5, 2.0], [10, 12], samples={10: 3, 12: 2})
    assert res.samples == {10: 3, 12: 2}
    assert res.transition_estimates == {10: None, 12: None}  # fewer than 5 points
    with pytest.raises(ConfigError):
        sweep_parameter(base, "lambda", [1.0, 2.0], [10])
    with pytest.raises(ConfigError):
        sweep_parameter(base, "mu", [2.0, 1.0], [10])
    with pytest.raises(ConfigError):
        sweep_parameter(base, "mu", [1.0, 2.0], [])


def test_local_maxima():
    x = np.linspace(-3, 3, 120)
    y = 1.5 * np.exp(-((x - 1.0) / 0.3) ** 2) + 1.5 * np.exp(-((x - 2.0) / 0.3) ** 2) + 0.02 * np.sin(17 * x)
    curve = BinnedCurve(x, y, np.zeros(120), np.ones(120, int))
    np.testing.assert_allclose(local_maxima(curve), [1.0, 2.0], atol=0.06)
    assert len(local_maxima(curve, min_prominence=0)) > 2
    with pytest.raises(ValueError):
        local_maxima(curve, window=0)
