"""Cosine eigenbasis on [0, pi]^d with a thin-plate-style spectrum.

The basis functions

    phi_beta(x) = (2/pi)^(d/2) * prod_j (1/sqrt 2)^[beta_j = 0] * cos(beta_j x_j)

are L2-orthonormal on the standard domain and eigenfunctions of the
regularisation operator a*(-Laplacian)^m + b with eigenvalue
a*(sum_j beta_j^2)^m + b, giving the prior spectrum
lambda_beta = 1 / (a*(sum_j beta_j^2)^m + b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ThinPlateParams",
    "SpectralBasis",
    "enumerate_multi_indices",
    "eval_cosine",
    "thin_plate_eigenvalue",
    "build_cosine_basis",
    "design_matrix",
]

DEFAULT_INDEX_CAP = 10**6


@dataclass(frozen=True)
class ThinPlateParams:
    """Spectrum hyperparameters: derivative weight a, zeroth-order weight b, order m."""

    a: float
    b: float
    m_order: int = 2

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if self.m_order < 1:
            raise ValueError("m_order must be >= 1")


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated Mercer system: positive eigenvalues (descending) and evaluable
    eigenfunctions on the standard domain [0, pi]^d.

    ``orthonormal`` is True when the eigenfunctions are exactly L2-orthonormal
    (cosine construction); grid-based constructions are only approximately so.
    """

    eigenvalues: np.ndarray
    d: int
    domain_measure: float
    kind: str
    design_fn: Callable[[np.ndarray], np.ndarray]
    project_constant_fn: Callable[[float], np.ndarray]
    orthonormal: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if np.any(ev <= 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def n_functions(self) -> int:
        return self.eigenvalues.shape[0]

    def design_matrix(self, points: np.ndarray) -> np.ndarray:
        """(m, N) matrix of eigenfunction evaluations, rows matching point order."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            raise ValueError(f"points have dimension {pts.shape[1]}, basis expects {self.d}")
        return self.design_fn(pts)

    def eval(self, i: int, x: np.ndarray) -> float:
        """Value of the i-th eigenfunction at a single point."""
        return float(self.design_matrix(np.atleast_2d(x))[0, i])

    def project_constant(self, value: float) -> np.ndarray:
        """Weight vector whose induced function best approximates the constant ``value``."""
        return self.project_constant_fn(value)


def enumerate_multi_indices(
    d: int, n_per_dim: int, cap: int = DEFAULT_INDEX_CAP
) -> np.ndarray:
    """Full tensor grid {0..n_per_dim-1}^d in lexicographic order, shape (N, d)."""
    if n_per_dim < 1:
        raise ValueError("n_per_dim must be >= 1")
    n_total = n_per_dim**d
    if n_total > cap:
        raise ValueError(f"basis size {n_per_dim}^{d} = {n_total} exceeds cap {cap}")
    grids = np.meshgrid(*[np.arange(n_per_dim)] * d, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def eval_cosine(beta: np.ndarray, x: np.ndarray) -> float:
    """Single cosine eigenfunction phi_beta at one standard-domain point."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.int64))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = beta.shape[0]
    amp = (2.0 / math.pi) ** (d / 2.0) * (1.0 / math.sqrt(2.0)) ** int(np.sum(beta == 0))
    return float(amp * np.prod(np.cos(beta * x)))


def thin_plate_eigenvalue(beta: np.ndarray, params: ThinPlateParams) -> float:
    """Prior eigenvalue 1 / (a * s^m + b) with s = sum_j beta_j^2 (integer exact)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.int64))
    s = int(np.sum(beta * beta))
    return 1.0 / (params.a * float(s) ** params.m_order + params.b) if s else 1.0 / params.b


def _cosine_design(indices: np.ndarray, amps: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # (m, N, d) broadcast; fine at desk scale, rows are independent.
    prod = np.cos(pts[:, None, :] * indices[None, :, :]).prod(axis=2)
    return prod * amps[None, :]


def build_cosine_basis(
    d: int,
    n_per_dim: int,
    params: ThinPlateParams,
    cap: int = DEFAULT_INDEX_CAP,
) -> SpectralBasis:
    """Cosine SpectralBasis with eigenvalues sorted descending.

    Ties (equal total order s) break by lexicographic multi-index order for
    cross-platform determinism.
    """
    indices = enumerate_multi_indices(d, n_per_dim, cap=cap)
    s = np.sum(indices * indices, axis=1)
    ev = np.where(
        s == 0,
        1.0 / params.b,
        1.0 / (params.a * s.astype(float) ** params.m_order + params.b),
    )
    # stable sort on s ascending == eigenvalue descending, lexicographic tie-break
    order = np.argsort(s, kind="stable")
    indices = indices[order]
    ev = ev[order]
    amps = (2.0 / math.pi) ** (d / 2.0) * (1.0 / math.sqrt(2.0)) ** np.sum(
        indices == 0, axis=1
    )
    vol = math.pi**d

    def design(pts: np.ndarray) -> np.ndarray:
        return _cosine_design(indices, amps, pts)

    def project_constant(value: float) -> np.ndarray:
        # phi_0 is the constant 1/sqrt(vol); index 0 after the sort (s = 0 is minimal)
        w = np.zeros(indices.shape[0])
        w[0] = value * math.sqrt(vol)
        return w

    return SpectralBasis(
        eigenvalues=ev,
        d=d,
        domain_measure=vol,
        kind="cosine",
        design_fn=design,
        project_constant_fn=project_constant,
        orthonormal=True,
        meta={
            "indices": indices,
            "n_per_dim": n_per_dim,
            "a": params.a,
            "b": params.b,
            "m_order": params.m_order,
        },
    )


def design_matrix(basis: SpectralBasis, points: np.ndarray) -> np.ndarray:
    """Convenience wrapper for ``basis.design_matrix``."""
    return basis.design_matrix(points)
