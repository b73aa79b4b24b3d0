"""Closed-form covariances, grid-based spectral approximation, equivalent kernel.

When a covariance k is known only in closed form, its Mercer system is
approximated by eigendecomposing the measure-weighted kernel matrix on a
regular grid (quadrature-weighted Nystrom construction, Lebesgue measure on
the standard domain). The equivalent kernel reweights any spectral basis by
lambda_i / (1 + lambda_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import SpectralBasis
from .domain import BoxDomain

__all__ = [
    "GaussianKernelParams",
    "NystromConfig",
    "gaussian_kernel",
    "gaussian_kernel_matrix",
    "nystrom_basis",
    "equivalent_kernel",
    "equivalent_kernel_matrix",
]


@dataclass(frozen=True)
class GaussianKernelParams:
    """Amplitude gamma and lengthscale of the squared-exponential covariance."""

    gamma: float
    lengthscale: float

    def __post_init__(self):
        if self.gamma <= 0 or self.lengthscale <= 0:
            raise ValueError("gamma and lengthscale must be positive")


@dataclass(frozen=True)
class NystromConfig:
    """Grid resolution and rank-retention policy for the spectral approximation.

    ``max_rank`` keeps at most that many leading eigenpairs; ``rel_threshold``
    drops eigenvalues below rel_threshold * lambda_max (numerically null pairs
    destabilise the eigenfunction rescaling).
    """

    grid_points_per_dim: int = 64
    max_rank: int | None = None
    rel_threshold: float = 1e-12

    def __post_init__(self):
        if self.grid_points_per_dim < 1:
            raise ValueError("grid_points_per_dim must be >= 1")
        if not 0.0 < self.rel_threshold <= 1.0:
            raise ValueError("rel_threshold must be in (0, 1]")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")


def gaussian_kernel_matrix(
    X: np.ndarray, Z: np.ndarray, params: GaussianKernelParams
) -> np.ndarray:
    """k(X, Z) with k(x, z) = gamma^2 exp(-|x - z|^2 / (2 l^2))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise ValueError("point dimensions differ")
    sq = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ Z.T
        + np.sum(Z * Z, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return params.gamma**2 * np.exp(-sq / (2.0 * params.lengthscale**2))


def gaussian_kernel(x: np.ndarray, z: np.ndarray, params: GaussianKernelParams) -> float:
    """Squared-exponential covariance between two points."""
    return float(gaussian_kernel_matrix(np.atleast_2d(x), np.atleast_2d(z), params)[0, 0])


def _midpoint_grid(domain: BoxDomain, per_dim: int) -> np.ndarray:
    axes = [
        domain.lower[j]
        + (np.arange(per_dim) + 0.5) * (domain.upper[j] - domain.lower[j]) / per_dim
        for j in range(domain.d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def nystrom_basis(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    domain: BoxDomain,
    config: NystromConfig = NystromConfig(),
) -> SpectralBasis:
    """Approximate Mercer system of a closed-form kernel on a box domain.

    ``kernel(X, Z)`` must return the matrix of pairwise covariances. A regular
    midpoint grid X' of size M carries quadrature weight vol(domain)/M; the
    symmetric matrix (vol/M) k(X', X') is eigendecomposed and the eigenpairs
    are rescaled so the eigenfunctions are quadrature-orthonormal under the
    Lebesgue measure.
    """
    grid = _midpoint_grid(domain, config.grid_points_per_dim)
    M = grid.shape[0]
    vol = domain.volume()
    weight = vol / M
    K = np.asarray(kernel(grid, grid), dtype=float)
    K = 0.5 * (K + K.T)
    tr = float(np.trace(K)) * weight
    evals, evecs = np.linalg.eigh(weight * K)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    if evals[-1] < -1e-8 * max(tr, 1e-300):
        raise ValueError(
            f"kernel is not positive semi-definite: min eigenvalue {evals[-1]:.3e}"
        )
    keep = evals > config.rel_threshold * max(evals[0], 0.0)
    if config.max_rank is not None:
        keep &= np.arange(len(evals)) < config.max_rank
    if not np.any(keep):
        raise ValueError("no eigenpairs retained; kernel numerically null on the grid")
    lam = evals[keep]
    E = evecs[:, keep]
    # phi_i(x) = sqrt(vol/M)/lam_i * k(x, X') e_i; equals sqrt(M/vol)*e_i on the grid,
    # making the grid-quadrature Gram matrix the identity.
    coeff = E * (math.sqrt(weight) / lam)[None, :]

    def design(pts: np.ndarray) -> np.ndarray:
        return np.asarray(kernel(pts, grid), dtype=float) @ coeff

    def project_constant(value: float) -> np.ndarray:
        phi_grid = E * math.sqrt(M / vol)
        w, *_ = np.linalg.lstsq(phi_grid, np.full(M, value), rcond=None)
        return w

    return SpectralBasis(
        eigenvalues=lam,
        d=domain.d,
        domain_measure=vol,
        kind="nystrom",
        design_fn=design,
        project_constant_fn=project_constant,
        orthonormal=False,
        meta={"grid_points_per_dim": config.grid_points_per_dim, "grid_size": M},
    )


def equivalent_kernel_matrix(
    basis: SpectralBasis, X: np.ndarray, Z: np.ndarray
) -> np.ndarray:
    """Matrix of k~(x, z) = sum_i lambda_i/(1 + lambda_i) phi_i(x) phi_i(z)."""
    w = basis.eigenvalues / (1.0 + basis.eigenvalues)
    PX = basis.design_matrix(X)
    PZ = basis.design_matrix(Z)
    return (PX * w[None, :]) @ PZ.T


def equivalent_kernel(basis: SpectralBasis, x: np.ndarray, y: np.ndarray) -> float:
    """Equivalent kernel between two standard-domain points."""
    return float(
        equivalent_kernel_matrix(basis, np.atleast_2d(x), np.atleast_2d(y))[0, 0]
    )
