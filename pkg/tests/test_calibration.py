import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from cheshire.calibration import (FringeSeries, estimate_R_empty, estimate_R_postselected,
                                  fit_fringe, fit_fringe_cos, quality_factor_prediction)
from cheshire.errors import DomainError, UnderdeterminedFitError
from cheshire.model import scenario_config
from cheshire.oracle import detection_probs

GRID = np.radians(np.arange(0, 360, 45))


def _series(b, v, chi=GRID, sigma=None, beam="O"):
    return FringeSeries.from_arrays(chi, b * (1 + v * np.sin(chi)), sigma, beam)


@pytest.mark.parametrize("b, v", [(5378, 0.82), (10467, -0.41), (1.0, 0.0), (3.3, 1.0)])
def test_noiseless_fit_is_exact(b, v):
    r = fit_fringe(_series(b, v))
    assert r.b == pytest.approx(b, rel=1e-12)
    assert r.v == pytest.approx(v, abs=1e-9)
    assert r.residual_rms < 1e-9 * b
    assert not r.flagged


@given(st.floats(1, 1e5), st.floats(-1, 1),
       st.lists(st.floats(-3.1, 3.1), min_size=3, max_size=20, unique=True))
def test_noiseless_fit_arbitrary_grid(b, v, chi):
    chi = np.sort(chi)
    if np.ptp(np.sin(chi)) < 1e-3:
        return
    r = fit_fringe(_series(b, v, chi))
    assert r.v == pytest.approx(v, abs=1e-9)


def test_weighted_fit_uses_sigma():
    chi = GRID
    y = 100 * (1 + 0.5 * np.sin(chi))
    y[0] += 50  # one bad point with a huge error bar
    sigma = np.ones_like(y)
    sigma[0] = 1e6
    r = fit_fringe(FringeSeries.from_arrays(chi, y, sigma))
    assert r.v == pytest.approx(0.5, abs=1e-6)
    assert fit_fringe(FringeSeries.from_arrays(chi, y)).v != pytest.approx(0.5, abs=1e-3)


def test_noisy_fit_is_unbiased():
    rng = np.random.default_rng(12)
    b, v = 5378.0, 0.82
    truth = b * (1 + v * np.sin(GRID))
    vs, errs = [], []
    for _ in range(200):
        r = fit_fringe(FringeSeries.from_arrays(GRID, truth + rng.normal(0, 0.01 * b, GRID.size)))
        vs.append(r.v)
        errs.append(r.stderr_v)
    stderr_mean = np.std(vs) / math.sqrt(len(vs))
    assert abs(np.mean(vs) - v) < 2 * stderr_mean
    # the delta-method error matches the scatter of the estimates
    assert np.mean(errs) == pytest.approx(np.std(vs), rel=0.25)


def test_rank_deficient_design():
    chi = np.array([0.3, math.pi - 0.3, 2 * math.pi + 0.3])
    with pytest.raises(UnderdeterminedFitError):
        fit_fringe(FringeSeries.from_arrays(chi, [1, 1, 1]))
    with pytest.raises(UnderdeterminedFitError):
        fit_fringe(FringeSeries.from_arrays(GRID[:2], [1, 2]))


def test_flag_for_impossible_visibility():
    y = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 2.0]) * 100
    r = fit_fringe(FringeSeries.from_arrays(GRID, 10 + y * 0 + 1e-3 * np.sin(GRID) + 0.0))
    assert not r.flagged
    r = fit_fringe(FringeSeries.from_arrays(GRID, 1 + 3 * np.sin(GRID) + 3))
    assert r.v == pytest.approx(0.75)
    r = fit_fringe(FringeSeries.from_arrays(GRID, 0.01 + 3 * (1 + np.sin(GRID))))
    assert not r.flagged


@pytest.mark.parametrize("b, v, phase", [(1000, 0.4, 0.3), (50, 0.9, -2.0), (7, 0.1, 3.0)])
def test_cos_variant(b, v, phase):
    y = b * (1 + v * np.cos(GRID + phase))
    r = fit_fringe_cos(FringeSeries.from_arrays(GRID, y))
    assert (r.b, r.v) == pytest.approx((b, v), rel=1e-10)
    assert math.remainder(r.phase - phase, 2 * math.pi) == pytest.approx(0.0, abs=1e-10)


def test_series_validation():
    with pytest.raises(ValueError):
        FringeSeries((0.0, 0.0), (1, 2))
    with pytest.raises(ValueError):
        FringeSeries((0.0, 1.0), (1, -2))
    with pytest.raises(ValueError):
        FringeSeries((0.0, 1.0), (1, 2), sigma=(1, 0))
    with pytest.raises(ValueError):
        FringeSeries((0.0, 1.0), (1, 2), beam="X")


@pytest.mark.parametrize("R", [0.22, 0.05, 0.4, 0.5])
def test_oracle_empty_fringes(R):
    c = [scenario_config("EMPTY", chi).replace(R=R) for chi in GRID]
    h = fit_fringe(FringeSeries.from_arrays(GRID, [detection_probs(x).H for x in c], beam="H"))
    o = fit_fringe(FringeSeries.from_arrays(GRID, [detection_probs(x).O for x in c]))
    T = 1 - R
    assert o.v == pytest.approx(1.0, abs=1e-9)
    assert -h.v == pytest.approx(2 * R * T / (R * R + T * T), abs=1e-9)


@pytest.mark.parametrize("a, expected", [
    (1.0, (0.5, 0.5)),
    (3.0, (0.5 * (1 - math.sqrt(0.5)), 0.5 * (1 + math.sqrt(0.5)))),
])
def test_estimate_R_empty_examples(a, expected):
    assert estimate_R_empty(a) == pytest.approx(expected)


def test_estimate_R_measured_ratios():
    lo, hi = estimate_R_empty(10467 / 5378)
    assert (lo, hi) == pytest.approx((0.22, 0.78), abs=0.005)
    lo, hi = estimate_R_postselected(144 / 11)
    assert (lo, hi) == pytest.approx((0.07, 0.93), abs=0.005)
    assert estimate_R_postselected(13) == pytest.approx(
        (0.5 * (1 - math.sqrt(11 / 15)), 0.5 * (1 + math.sqrt(11 / 15))))
    assert estimate_R_postselected(2.0) == (0.5, 0.5)


@pytest.mark.parametrize("f, a", [(estimate_R_empty, 0.99), (estimate_R_postselected, 1.5),
                                  (estimate_R_empty, math.nan)])
def test_estimator_domain(f, a):
    with pytest.raises(DomainError):
        f(a)


@given(st.floats(0.001, 0.999))
def test_estimators_invert_the_model(R):
    h, o = oracles.P_empty(0.0, R)
    assert sorted(estimate_R_empty(h / o)) == pytest.approx(sorted([R, 1 - R]), abs=1e-10)
    h, o = oracles.P_H(0, 0, 0, 1, 1, R), oracles.P_O(0, 0, 0, 1, 1, R)
    assert sorted(estimate_R_postselected(h / o)) == pytest.approx(sorted([R, 1 - R]), abs=1e-10)


def test_quality_factor():
    assert quality_factor_prediction(0.22, 1.0) == pytest.approx(0.52, abs=0.005)
    assert quality_factor_prediction(0.22, 0.82) == pytest.approx(0.43, abs=0.01)
    assert quality_factor_prediction(0.5, 1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        quality_factor_prediction(0.22, 1.5)
