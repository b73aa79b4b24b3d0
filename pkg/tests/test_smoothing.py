import math

import numpy as np
import pytest
from scipy.special import ndtr

from lbpp.domain import NormalizedPattern, PointPattern, standard_domain
from lbpp.metrics import Quadrature, integrate
from lbpp.smoothing import (
    KsModel,
    default_bandwidth_grid,
    fit_ks,
    ks_intensity,
    ks_intensity_fn,
    loo_bandwidth,
    loo_score,
)


def _norm(points, d=1):
    pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(len(points), d)
    dom = standard_domain(d)
    return NormalizedPattern(PointPattern(pts, dom), 1.0, dom)


def test_edge_constants_match_gaussian_mass():
    data = _norm([[0.2], [1.5]])
    model = fit_ks(data, 0.5)
    for i, x in enumerate([0.2, 1.5]):
        expected = ndtr((np.pi - x) / 0.5) - ndtr((0.0 - x) / 0.5)
        assert model.edge_constants[i] == pytest.approx(expected, rel=1e-12)


def test_intensity_integrates_to_count():
    data = _norm([[0.1], [0.4], [1.5], [2.9], [3.0]])
    model = fit_ks(data, 0.3)
    q = Quadrature(standard_domain(1), 8192)
    total = integrate(q, lambda x: ks_intensity(model, x))
    assert total == pytest.approx(5.0, rel=1e-4)


def test_intensity_integrates_to_count_2d():
    rng = np.random.default_rng(1)
    pts = rng.random((20, 2)) * np.pi
    data = _norm(pts, d=2)
    model = fit_ks(data, 0.4)
    q = Quadrature(standard_domain(2), 512)
    total = integrate(q, lambda x: ks_intensity(model, x))
    assert total == pytest.approx(20.0, rel=1e-3)


def test_single_interior_kernel_value():
    # deep interior, tiny bandwidth: edge constant ~ 1, peak = Gaussian normalizer
    data = _norm([[np.pi / 2]])
    h = 0.05
    model = fit_ks(data, h)
    peak = ks_intensity(model, np.array([[np.pi / 2]]))[0]
    assert peak == pytest.approx((2 * math.pi * h * h) ** -0.5, rel=1e-8)


def test_intensity_positive_everywhere():
    data = _norm([[1.0], [2.0]])
    model = fit_ks(data, 0.2)
    x = np.linspace(0, np.pi, 200)[:, None]
    assert np.all(ks_intensity(model, x) > 0)


def test_empty_pattern_gives_zero_intensity():
    model = fit_ks(_norm(np.zeros((0, 1))), 0.3)
    assert np.all(ks_intensity(model, np.array([[1.0], [2.0]])) == 0.0)


def test_ks_model_validation():
    data = _norm([[1.0]])
    with pytest.raises(ValueError):
        KsModel(-0.1, data, np.array([0.5]))
    with pytest.raises(ValueError):
        KsModel(0.1, data, np.array([1.5]))


def test_intensity_fn_wrapper():
    model = fit_ks(_norm([[1.0], [2.0]]), 0.3)
    fn = ks_intensity_fn(model)
    x = np.array([[1.5]])
    np.testing.assert_allclose(fn.eval(x), ks_intensity(model, x))
    assert fn.upper_bound == math.inf


def test_default_bandwidth_grid_range():
    data = _norm([[0.5], [0.9], [2.5]])
    grid = default_bandwidth_grid(data)
    assert len(grid) == 30
    assert grid[0] == pytest.approx(0.2)  # min pairwise distance 0.4, halved
    assert grid[-1] == pytest.approx(np.pi / 2)
    assert np.all(np.diff(np.log(grid)) > 0)


def test_default_bandwidth_grid_needs_two_points():
    with pytest.raises(ValueError):
        default_bandwidth_grid(_norm([[1.0]]))


def test_loo_score_two_point_oracle():
    # two points: leave-one-out density of each is the other's corrected kernel
    x0, x1, h = 1.0, 2.0, 0.4
    data = _norm([[x0], [x1]])
    c = fit_ks(data, h).edge_constants
    pdf = math.exp(-((x1 - x0) ** 2) / (2 * h * h)) / math.sqrt(2 * math.pi * h * h)
    expected = 0.5 * (math.log(pdf / c[1]) + math.log(pdf / c[0]))
    assert loo_score(data, h) == pytest.approx(expected, rel=1e-12)


def test_loo_score_tiny_bandwidth_collapses():
    # small but representable bandwidths score badly; extreme ones hit -inf
    data = _norm([[0.5], [2.5]])
    assert loo_score(data, 1e-4) < loo_score(data, 0.5)
    assert loo_score(data, 1e-160) == float("-inf")


def test_loo_bandwidth_selects_reasonable_scale():
    rng = np.random.default_rng(0)
    pts = np.sort(rng.normal(np.pi / 2, 0.3, 60)) % np.pi
    data = _norm(pts[:, None])
    h, scores = loo_bandwidth(data)
    assert 0.01 < h < 2.0
    assert len(scores) == 30


def test_loo_bandwidth_first_wins_on_ties():
    data = _norm([[1.0], [1.5], [2.0]])
    h, scores = loo_bandwidth(data, np.array([0.5, 0.5, 0.5]))
    assert h == 0.5
    assert scores[0] == scores[1] == scores[2]


def test_loo_bandwidth_all_neginf_raises():
    data = _norm([[0.5], [2.5]])
    with pytest.raises(ValueError, match="-inf"):
        loo_bandwidth(data, np.array([1e-160, 1e-161]))


def test_loo_bandwidth_rejects_nonpositive():
    data = _norm([[0.5], [2.5]])
    with pytest.raises(ValueError):
        loo_bandwidth(data, np.array([0.0, 0.5]))
