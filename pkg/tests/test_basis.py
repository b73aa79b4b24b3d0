import math

import numpy as np
import pytest

from lbpp.basis import (
    SpectralBasis,
    ThinPlateParams,
    build_cosine_basis,
    enumerate_multi_indices,
    eval_cosine,
    thin_plate_eigenvalue,
)


def test_enumerate_counts_and_order():
    assert enumerate_multi_indices(2, 32).shape == (1024, 2)
    np.testing.assert_array_equal(enumerate_multi_indices(1, 1), [[0]])
    idx = enumerate_multi_indices(3, 2)
    assert idx.shape == (8, 3)
    np.testing.assert_array_equal(idx[0], [0, 0, 0])
    np.testing.assert_array_equal(idx[-1], [1, 1, 1])
    # lexicographic
    assert sorted(map(tuple, idx)) == list(map(tuple, idx))


def test_enumerate_cap():
    with pytest.raises(ValueError, match="cap"):
        enumerate_multi_indices(3, 200, cap=10**6)


def test_eval_cosine_values():
    assert eval_cosine([0], [0.3]) == pytest.approx(1.0 / math.sqrt(math.pi))
    assert eval_cosine([1], [0.0]) == pytest.approx(math.sqrt(2.0 / math.pi))


def test_eval_cosine_unit_norm_by_quadrature():
    g = 512
    x = (np.arange(g) + 0.5) * math.pi / g
    vals = np.array([eval_cosine([3], [xi]) for xi in x])
    assert (math.pi / g) * np.sum(vals**2) == pytest.approx(1.0, abs=1e-10)


def test_thin_plate_eigenvalue_arithmetic():
    p = ThinPlateParams(a=1.0, b=1.0, m_order=2)
    assert thin_plate_eigenvalue([0, 0], p) == pytest.approx(1.0)
    assert thin_plate_eigenvalue([1, 1], p) == pytest.approx(0.2)


def test_spectrum_bounded_and_sorted():
    basis = build_cosine_basis(2, 8, ThinPlateParams(a=3.0, b=2.0))
    assert basis.eigenvalues[0] == pytest.approx(1.0 / 2.0)
    assert np.all(basis.eigenvalues <= 1.0 / 2.0 + 1e-15)
    assert np.all(np.diff(basis.eigenvalues) <= 0)


def test_spectrum_monotone_in_total_order():
    basis = build_cosine_basis(1, 16, ThinPlateParams(a=0.7, b=0.3))
    idx = basis.meta["indices"].ravel()
    s = idx**2
    assert np.all(np.diff(s) >= 0)  # sorted ascending s == descending eigenvalue


def test_design_matrix_shapes_and_constant_column():
    basis = build_cosine_basis(1, 8, ThinPlateParams(a=1.0, b=1.0))
    empty = basis.design_matrix(np.zeros((0, 1)))
    assert empty.shape == (0, 8)
    phi = basis.design_matrix(np.array([[1.234]]))
    assert phi[0, 0] == pytest.approx(1.0 / math.sqrt(math.pi))


@pytest.mark.parametrize("n", [16, 64, 128])
def test_quadrature_orthonormality_1d(n):
    basis = build_cosine_basis(1, n, ThinPlateParams(a=1.0, b=1.0))
    g = 1024
    nodes = ((np.arange(g) + 0.5) * math.pi / g).reshape(-1, 1)
    phi = basis.design_matrix(nodes)
    gram = (math.pi / g) * phi.T @ phi
    assert np.max(np.abs(gram - np.eye(n))) < 1e-6


def test_pairwise_orthonormality_2d():
    basis = build_cosine_basis(2, 6, ThinPlateParams(a=1.0, b=1.0))
    g = 64
    ax = (np.arange(g) + 0.5) * math.pi / g
    mx, my = np.meshgrid(ax, ax, indexing="ij")
    nodes = np.stack([mx.ravel(), my.ravel()], axis=1)
    phi = basis.design_matrix(nodes)
    gram = (math.pi**2 / g**2) * phi.T @ phi
    assert np.max(np.abs(gram - np.eye(36))) < 1e-6


def test_kernel_matrix_psd():
    basis = build_cosine_basis(2, 5, ThinPlateParams(a=0.5, b=0.2))
    rng = np.random.default_rng(0)
    pts = rng.random((30, 2)) * math.pi
    phi = basis.design_matrix(pts)
    K = (phi * basis.eigenvalues[None, :]) @ phi.T
    evs = np.linalg.eigvalsh(0.5 * (K + K.T))
    assert evs.min() >= -1e-10 * np.trace(K)


def test_vterm_sum_increases_with_truncation():
    params = ThinPlateParams(a=1.0, b=1.0)
    sums = [
        np.sum(np.log1p(build_cosine_basis(1, n, params).eigenvalues))
        for n in (4, 8, 16, 32)
    ]
    assert np.all(np.diff(sums) > 0)
    assert np.isfinite(sums[-1])


def test_eigen_relation_symbolic():
    # (a*(-Laplacian)^m + b) phi_beta = (a*s^m + b) phi_beta, via sympy derivatives
    import sympy as sp

    x1, x2 = sp.symbols("x1 x2")
    a, b, m = 0.9, 1.7, 2
    rng = np.random.default_rng(5)
    for beta in [(0, 0), (1, 0), (2, 3), (4, 1)]:
        expr = sp.cos(beta[0] * x1) * sp.cos(beta[1] * x2)
        lap = sp.diff(expr, x1, 2) + sp.diff(expr, x2, 2)
        lap2 = sp.diff(lap, x1, 2) + sp.diff(lap, x2, 2)  # Laplacian^2 = (-Lap)^2
        op = a * lap2 + b * expr
        s = beta[0] ** 2 + beta[1] ** 2
        expected_factor = a * s**m + b
        f_op = sp.lambdify((x1, x2), op, "numpy")
        f_phi = sp.lambdify((x1, x2), expr, "numpy")
        pts = rng.random((25, 2)) * math.pi
        lhs = f_op(pts[:, 0], pts[:, 1])
        rhs = expected_factor * np.asarray(f_phi(pts[:, 0], pts[:, 1]), dtype=float)
        np.testing.assert_allclose(np.broadcast_to(lhs, rhs.shape), rhs, atol=1e-9)


def test_eigenvalues_must_be_positive():
    with pytest.raises(ValueError):
        SpectralBasis(
            eigenvalues=np.array([1.0, 0.0]),
            d=1,
            domain_measure=math.pi,
            kind="x",
            design_fn=lambda p: np.zeros((len(p), 2)),
            project_constant_fn=lambda c: np.zeros(2),
        )
