import math

import numpy as np
import pytest

from lbpp.domain import BoxDomain, PointPattern, standard_domain
from lbpp.metrics import (
    Quadrature,
    default_quadrature,
    expected_log_likelihood,
    integrate,
    l2_error,
    pp_kl_divergence,
    test_log_likelihood as heldout_log_likelihood,
)
from lbpp.simulate import IntensityFn


def test_quadrature_weights_sum_to_volume():
    dom = BoxDomain(np.array([0.0, 1.0]), np.array([2.0, 4.0]))
    q = Quadrature(dom, 16)
    assert q.weight * len(q.nodes) == pytest.approx(dom.volume(), rel=1e-14)


def test_quadrature_nodes_avoid_boundary():
    q = Quadrature(standard_domain(1), 8)
    assert np.min(q.nodes) > 0 and np.max(q.nodes) < np.pi


def test_integrate_polynomial_exact_enough():
    q = Quadrature(standard_domain(1), 4096)
    # integral of x^2 on [0, pi] = pi^3/3; midpoint error O(h^2)
    assert integrate(q, lambda x: x[:, 0] ** 2) == pytest.approx(np.pi**3 / 3, rel=1e-6)


def test_integrate_cosine_2d():
    q = Quadrature(standard_domain(2), 256)
    val = integrate(q, lambda x: np.cos(x[:, 0]) ** 2 * np.cos(x[:, 1]) ** 2)
    assert val == pytest.approx(np.pi**2 / 4, rel=1e-6)


def test_integrate_rejects_nonfinite():
    q = Quadrature(standard_domain(1), 8)
    with pytest.raises(ValueError, match="non-finite"), np.errstate(invalid="ignore"):
        integrate(q, lambda x: np.log(x[:, 0] - 10.0))


def test_integrate_rejects_wrong_shape():
    q = Quadrature(standard_domain(1), 8)
    with pytest.raises(ValueError):
        integrate(q, lambda x: np.ones(3))


def test_default_quadrature_resolution():
    assert default_quadrature(standard_domain(1)).points_per_dim == 4096
    assert default_quadrature(standard_domain(2)).points_per_dim == 256
    assert default_quadrature(standard_domain(3)).points_per_dim == 32


def test_l2_error_constant_offset():
    q = Quadrature(standard_domain(1), 1024)
    err = l2_error(lambda x: np.full(len(x), 3.0), lambda x: np.full(len(x), 1.0), q)
    assert err == pytest.approx(4.0 * np.pi, rel=1e-12)


def test_l2_error_zero_for_identical():
    q = Quadrature(standard_domain(1), 256)
    f = lambda x: np.sin(x[:, 0]) ** 2
    assert l2_error(f, f, q) == 0.0


def test_expected_log_likelihood_constant_case():
    # lam_true = lam_hat = c: integral of (c log c - c)
    q = Quadrature(standard_domain(1), 512)
    c = 4.0
    f = lambda x: np.full(len(x), c)
    assert expected_log_likelihood(f, f, q) == pytest.approx(
        np.pi * (c * math.log(c) - c), rel=1e-12
    )


def test_expected_log_likelihood_maximized_at_truth():
    q = Quadrature(standard_domain(1), 512)
    truth = lambda x: 2.0 + np.sin(x[:, 0]) ** 2
    best = expected_log_likelihood(truth, truth, q)
    for c in (1.0, 2.5, 5.0):
        other = lambda x, c=c: np.full(len(x), c)
        assert expected_log_likelihood(truth, other, q) < best


def test_expected_log_likelihood_zero_handling():
    q = Quadrature(standard_domain(1), 64)
    zero = lambda x: np.zeros(len(x))
    c = lambda x: np.full(len(x), 2.0)
    # truth zero: only the -lam_hat mass remains
    assert expected_log_likelihood(zero, c, q) == pytest.approx(-2.0 * np.pi, rel=1e-12)
    # estimate zero where truth positive: -inf
    assert expected_log_likelihood(c, zero, q) == float("-inf")


def test_expected_log_likelihood_rejects_negative():
    q = Quadrature(standard_domain(1), 16)
    with pytest.raises(ValueError):
        expected_log_likelihood(lambda x: -np.ones(len(x)), lambda x: np.ones(len(x)), q)


def test_test_log_likelihood_constant_oracle():
    dom = standard_domain(1)
    q = Quadrature(dom, 2048)
    pts = PointPattern(np.array([[0.5], [1.5], [2.5]]), dom)
    c = 3.0
    ll = heldout_log_likelihood(lambda x: np.full(len(x), c), pts, q)
    assert ll == pytest.approx(3 * math.log(c) - c * np.pi, rel=1e-10)


def test_test_log_likelihood_empty_pattern():
    dom = standard_domain(1)
    q = Quadrature(dom, 256)
    pts = PointPattern(np.zeros((0, 1)), dom)
    assert heldout_log_likelihood(lambda x: np.full(len(x), 2.0), pts, q) == pytest.approx(
        -2.0 * np.pi, rel=1e-12
    )


def test_test_log_likelihood_vanishing_estimate():
    dom = standard_domain(1)
    q = Quadrature(dom, 256)
    pts = PointPattern(np.array([[1.0]]), dom)
    f = lambda x: np.where(x[:, 0] > 2.0, 1.0, 0.0)
    assert heldout_log_likelihood(f, pts, q) == float("-inf")


def test_kl_zero_for_equal_intensities():
    q = Quadrature(standard_domain(1), 512)
    f = lambda x: 1.0 + x[:, 0]
    assert pp_kl_divergence(f, f, q) == pytest.approx(0.0, abs=1e-12)


def test_kl_nonnegative_and_asymmetric():
    q = Quadrature(standard_domain(1), 1024)
    f = lambda x: np.full(len(x), 2.0)
    g = lambda x: 1.0 + x[:, 0]
    kfg = pp_kl_divergence(f, g, q)
    kgf = pp_kl_divergence(g, f, q)
    assert kfg > 0 and kgf > 0
    assert kfg != pytest.approx(kgf, rel=1e-3)


def test_kl_constant_closed_form():
    q = Quadrature(standard_domain(1), 512)
    a, b = 3.0, 5.0
    f = lambda x: np.full(len(x), a)
    g = lambda x: np.full(len(x), b)
    expected = np.pi * (a * math.log(a / b) + b - a)
    assert pp_kl_divergence(f, g, q) == pytest.approx(expected, rel=1e-12)


def test_kl_infinite_when_support_mismatch():
    q = Quadrature(standard_domain(1), 64)
    f = lambda x: np.ones(len(x))
    g = lambda x: np.zeros(len(x))
    assert pp_kl_divergence(f, g, q) == float("inf")


def test_metrics_accept_intensity_fn_objects():
    q = Quadrature(standard_domain(1), 256)
    obj = IntensityFn(eval=lambda x: np.full(len(x), 2.0), upper_bound=2.0)
    assert integrate(q, obj.eval) == pytest.approx(2.0 * np.pi, rel=1e-12)
    assert l2_error(obj, lambda x: np.full(len(x), 2.0), q) == 0.0
