"""Ground-truth intensities as squared GP draws, and exact Poisson sampling
by thinning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import SpectralBasis
from .domain import BoxDomain, PointPattern, standard_domain
from .kernels import GaussianKernelParams, NystromConfig, gaussian_kernel_matrix, nystrom_basis

__all__ = [
    "IntensityFn",
    "BoundViolationError",
    "sample_gp_weights",
    "make_toy_intensity",
    "sample_poisson_thinning",
]


class BoundViolationError(RuntimeError):
    """The intensity exceeded its declared upper bound during thinning."""


@dataclass(frozen=True)
class IntensityFn:
    """Evaluable nonnegative intensity on standard coordinates with an upper bound.

    ``upper_bound`` must dominate the intensity wherever it is sampled;
    ``bound_is_empirical`` flags bounds certified only on a finite grid.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    upper_bound: float
    descriptor: str = ""
    bound_is_empirical: bool = False

    def __post_init__(self):
        if self.upper_bound < 0:
            raise ValueError("upper_bound must be nonnegative")


def sample_gp_weights(basis: SpectralBasis, seed: int) -> np.ndarray:
    """Draw prior weights w_i = sqrt(lambda_i) z_i with z i.i.d. standard normal."""
    rng = np.random.default_rng(seed)
    return np.sqrt(basis.eigenvalues) * rng.standard_normal(basis.n_functions)


def make_toy_intensity(
    kernel_params: GaussianKernelParams = GaussianKernelParams(gamma=5.0, lengthscale=0.5),
    domain: BoxDomain | None = None,
    seed: int = 0,
    grid_points_per_dim: int = 256,
    certify_points: int = 4096,
) -> IntensityFn:
    """Half-square of a GP draw with squared-exponential covariance.

    The draw uses the grid-based spectral surrogate of the kernel; the upper
    bound is 1.2x the maximum over a certification grid and is flagged
    empirical.
    """
    dom = domain or standard_domain(1)
    basis = nystrom_basis(
        lambda X, Z: gaussian_kernel_matrix(X, Z, kernel_params),
        dom,
        NystromConfig(grid_points_per_dim=grid_points_per_dim),
    )
    w = sample_gp_weights(basis, seed)

    def intensity(x: np.ndarray) -> np.ndarray:
        f = basis.design_matrix(np.atleast_2d(x)) @ w
        return 0.5 * f * f

    per_dim = max(2, int(round(certify_points ** (1.0 / dom.d))))
    axes = [
        np.linspace(dom.lower[j], dom.upper[j], per_dim) for j in range(dom.d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([g.ravel() for g in mesh], axis=1)
    bound = 1.2 * float(np.max(intensity(grid)))
    return IntensityFn(
        eval=intensity,
        upper_bound=bound,
        descriptor=f"half-square of GP draw, seed {seed}",
        bound_is_empirical=True,
    )


def sample_poisson_thinning(
    lam: IntensityFn, domain: BoxDomain, seed: int
) -> PointPattern:
    """Exact inhomogeneous Poisson sample by thinning a homogeneous proposal.

    Draws K ~ Poisson(upper_bound * vol), places K uniform points, keeps each
    with probability lam(x)/upper_bound. Raises if the bound is violated at a
    proposed point (never clips).
    """
    if not np.isfinite(lam.upper_bound):
        raise ValueError("upper_bound must be finite")
    rng = np.random.default_rng(seed)
    vol = domain.volume()
    if lam.upper_bound == 0.0:
        return PointPattern(np.zeros((0, domain.d)), domain)
    k = rng.poisson(lam.upper_bound * vol)
    proposals = domain.lower + rng.random((k, domain.d)) * (domain.upper - domain.lower)
    if k == 0:
        return PointPattern(proposals, domain)
    values = np.asarray(lam.eval(proposals), dtype=float).ravel()
    if np.any(values > lam.upper_bound):
        worst = proposals[np.argmax(values)]
        raise BoundViolationError(
            f"intensity {np.max(values):.6g} exceeds bound {lam.upper_bound:.6g} at {worst}"
        )
    keep = rng.random(k) < values / lam.upper_bound
    return PointPattern(proposals[keep], domain)
