"""Laplace fit: Newton ascent to the posterior mode of the squared-link model.

The latent function is f(x) = w' Phi(x) with prior w ~ N(0, diag(lambda)),
observed through a Poisson process of intensity f^2/2. The fitted mode, dual
weights alpha_i = 2/f(x_i), the equivalent-kernel Gram matrix, and the
factorised low-rank matrix S = K~ .* (alpha alpha') + 2I are cached for
all downstream predictive and evidence queries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .basis import SpectralBasis, ThinPlateParams, build_cosine_basis
from .domain import (
    BoxDomain,
    NormalizedPattern,
    PointPattern,
    normalize,
    standard_domain,
)
from .kernels import (
    GaussianKernelParams,
    NystromConfig,
    equivalent_kernel_matrix,
    gaussian_kernel_matrix,
    nystrom_basis,
)

__all__ = [
    "FitOptions",
    "FittedModel",
    "ConvergenceError",
    "DegenerateFitError",
    "joint_log_density",
    "posterior_objective",
    "posterior_gradient",
    "fit_mode",
    "extract_alpha",
    "dual_objective_gradient",
    "stationarity_residual",
    "save_model",
    "load_model",
]

NEG_INF = float("-inf")


class ConvergenceError(RuntimeError):
    """Newton iteration hit the cap before reaching the gradient tolerance."""

    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


class DegenerateFitError(RuntimeError):
    """The latent function vanished at a data point."""


@dataclass(frozen=True)
class FitOptions:
    max_newton_iters: int = 100
    grad_tol: float = 1e-10
    ls_shrink: float = 0.5
    ls_sufficient_decrease: float = 1e-4
    init_weights: np.ndarray | None = None  # None = flat-rate start

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError("ls_shrink must be in (0, 1)")


@dataclass(frozen=True)
class FittedModel:
    basis: SpectralBasis
    data: NormalizedPattern
    w_hat: np.ndarray
    alpha_hat: np.ndarray
    phi_data: np.ndarray  # (m, N) design at data points
    k_tilde_xx: np.ndarray  # (m, m)
    s_cho: tuple | None  # Cholesky factor of S = K~ .* (aa') + 2I
    objective_trace: list[float]
    log_marginal_parts: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.data.m

    @property
    def f_hat_data(self) -> np.ndarray:
        return self.phi_data @ self.w_hat

    @classmethod
    def prior(cls, basis: SpectralBasis, data: NormalizedPattern) -> "FittedModel":
        """Data-free model (m = 0): zero mode, prior predictive covariance."""
        if data.m != 0:
            raise ValueError("prior model requires an empty pattern")
        empty = np.zeros((0, basis.n_functions))
        return cls(
            basis=basis,
            data=data,
            w_hat=np.zeros(basis.n_functions),
            alpha_hat=np.zeros(0),
            phi_data=empty,
            k_tilde_xx=np.zeros((0, 0)),
            s_cho=None,
            objective_trace=[],
            log_marginal_parts={},
        )


def _z_diag(basis: SpectralBasis) -> np.ndarray:
    return 1.0 + 1.0 / basis.eigenvalues


def posterior_objective(w: np.ndarray, basis: SpectralBasis, data: NormalizedPattern) -> float:
    """log h(X|w) - (1/2) w'(I + Lambda^{-1})w, the function the mode maximises."""
    phi = basis.design_matrix(data.pattern.points)
    return _objective(w, phi, _z_diag(basis))


def posterior_gradient(w: np.ndarray, basis: SpectralBasis, data: NormalizedPattern) -> np.ndarray:
    """Gradient of ``posterior_objective``: 2 sum_i Phi(x_i)/f(x_i) - (I + Lambda^{-1})w."""
    phi = basis.design_matrix(data.pattern.points)
    f = phi @ w
    if np.any(f == 0.0):
        raise DegenerateFitError("latent function vanishes at a data point")
    return 2.0 * (phi.T @ (1.0 / f)) - _z_diag(basis) * w


def joint_log_density(w: np.ndarray, basis: SpectralBasis, data: NormalizedPattern) -> float:
    """Full joint log density of (w, X) including normalising constants.

    Returns -inf (sentinel, not an exception) if the latent function is
    exactly zero at some data point.
    """
    n = basis.n_functions
    lam = basis.eigenvalues
    const = -0.5 * float(np.sum(np.log(lam))) - 0.5 * n * math.log(2.0 * math.pi)
    obj = posterior_objective(np.asarray(w, dtype=float), basis, data)
    if obj == NEG_INF:
        return NEG_INF
    return obj + const


def _objective(w: np.ndarray, phi: np.ndarray, z: np.ndarray) -> float:
    f = phi @ w
    if np.any(f == 0.0):
        return NEG_INF
    return float(np.sum(np.log(0.5 * f * f)) - 0.5 * np.dot(w, z * w))


def _barrier_objective(w: np.ndarray, phi: np.ndarray, z: np.ndarray) -> float:
    # Positive-orthant restriction used inside the line search: a step whose
    # latent value crosses zero at any data point is rejected outright.
    f = phi @ w
    if np.any(f <= 0.0):
        return NEG_INF
    return float(np.sum(np.log(0.5 * f * f)) - 0.5 * np.dot(w, z * w))


def fit_mode(
    basis: SpectralBasis,
    data: NormalizedPattern,
    opts: FitOptions = FitOptions(),
) -> FittedModel:
    """Newton ascent with backtracking line search to the posterior mode.

    Starts (by default) at the weights representing the constant function
    matching the homogeneous maximum-likelihood rate, which keeps every
    latent data value strictly positive throughout and selects the canonical
    nonnegative mode.
    """
    if data.m < 1:
        raise ValueError("fit requires at least one data point; use FittedModel.prior for m = 0")
    phi = basis.design_matrix(data.pattern.points)
    z = _z_diag(basis)
    n = basis.n_functions

    if opts.init_weights is not None:
        w = np.asarray(opts.init_weights, dtype=float).copy()
        if w.shape != (n,):
            raise ValueError(f"init_weights must have shape ({n},)")
    else:
        flat_f = math.sqrt(2.0 * data.m / basis.domain_measure)
        w = basis.project_constant(flat_f)
    obj = _barrier_objective(w, phi, z)
    if obj == NEG_INF:
        raise ValueError("initial weights give nonpositive latent values at data points")

    trace = [obj]
    converged = False
    for _ in range(opts.max_newton_iters):
        f = phi @ w
        grad = 2.0 * (phi.T @ (1.0 / f)) - z * w
        if float(np.max(np.abs(grad))) <= opts.grad_tol:
            converged = True
            break
        # Hessian of the negative objective: diag(z) + 2 Phi' diag(1/f^2) Phi (PD)
        H = (phi.T * (2.0 / (f * f))[None, :]) @ phi
        H[np.diag_indices_from(H)] += z
        step = scipy.linalg.cho_solve(scipy.linalg.cho_factor(H, lower=True), grad)
        slope = float(np.dot(grad, step))
        # Terminal phase: once the predicted increase slope/2 falls below the
        # objective's floating-point resolution, Armijo can no longer observe
        # progress; the pure Newton step is safe here and contracts the
        # gradient quadratically.
        if slope <= 1e-12 * (1.0 + abs(obj)) and np.all(phi @ (w + step) > 0.0):
            w = w + step
            obj = _barrier_objective(w, phi, z)
            trace.append(obj)
            continue
        t = 1.0
        new_obj = NEG_INF
        while t > 1e-14:
            cand = w + t * step
            new_obj = _barrier_objective(cand, phi, z)
            if new_obj >= obj + opts.ls_sufficient_decrease * t * slope:
                break
            t *= opts.ls_shrink
        else:
            raise ConvergenceError("line search failed to find an ascent step", trace)
        w = w + t * step
        obj = new_obj
        trace.append(obj)
    else:
        f = phi @ w
        grad = 2.0 * (phi.T @ (1.0 / f)) - z * w
        converged = float(np.max(np.abs(grad))) <= opts.grad_tol
    if not converged:
        raise ConvergenceError(
            f"no convergence in {opts.max_newton_iters} Newton iterations", trace
        )

    # canonical sign: nonnegative mean latent value over the data
    if float(np.mean(phi @ w)) < 0.0:
        w = -w
    return _finalize(basis, data, w, phi, trace)


def _finalize(
    basis: SpectralBasis,
    data: NormalizedPattern,
    w: np.ndarray,
    phi: np.ndarray,
    trace: list[float],
) -> FittedModel:
    f = phi @ w
    if np.any(np.abs(f) < 1e-300):
        raise DegenerateFitError("latent function vanished at a data point after fitting")
    alpha = 2.0 / f
    weights = basis.eigenvalues / (1.0 + basis.eigenvalues)
    k_tilde = (phi * weights[None, :]) @ phi.T
    S = k_tilde * np.outer(alpha, alpha)
    S[np.diag_indices_from(S)] += 2.0
    s_cho = scipy.linalg.cho_factor(S, lower=True)
    logdet_s = 2.0 * float(np.sum(np.log(np.diag(s_cho[0]))))
    z = _z_diag(basis)
    parts = {
        "data_term": float(np.sum(np.log(0.5 * f * f))),
        "quadratic_term": float(np.dot(w, z * w)),
        "v_term": -float(np.sum(np.log1p(basis.eigenvalues))),
        "logdet_s": logdet_s,
        "constant": data.m * math.log(2.0),
    }
    return FittedModel(
        basis=basis,
        data=data,
        w_hat=w,
        alpha_hat=alpha,
        phi_data=phi,
        k_tilde_xx=k_tilde,
        s_cho=s_cho,
        objective_trace=trace,
        log_marginal_parts=parts,
    )


def extract_alpha(model: FittedModel) -> np.ndarray:
    """Dual weights alpha_i = 2/f(x_i), checked against the stationarity identity."""
    f = model.f_hat_data
    if np.any(np.abs(f) < 1e-300):
        raise DegenerateFitError("degenerate fit: latent value below 1e-300 at a data point")
    alpha = 2.0 / f
    recon = (model.phi_data.T @ alpha) / _z_diag(model.basis)
    scale = 1.0 + float(np.max(np.abs(model.w_hat)))
    if float(np.max(np.abs(recon - model.w_hat))) > 1e-8 * scale:
        raise DegenerateFitError("dual/primal consistency identity violated")
    return alpha


def stationarity_residual(model: FittedModel) -> float:
    """Max-abs residual of w = (I + Lambda^{-1})^{-1} grad log h(X|w) at the mode."""
    recon = (model.phi_data.T @ (2.0 / model.f_hat_data)) / _z_diag(model.basis)
    return float(np.max(np.abs(model.w_hat - recon)))


def dual_objective_gradient(model: FittedModel) -> np.ndarray:
    """Gradient of the dual objective sum_i 2 log|K~_{i,:} a| - (1/2) a'K~a at alpha."""
    g = model.k_tilde_xx @ model.alpha_hat
    return 2.0 * (model.k_tilde_xx.T @ (1.0 / g)) - model.k_tilde_xx @ model.alpha_hat


# --- serialization ----------------------------------------------------------

FORMAT_VERSION = 1


def _basis_descriptor(basis: SpectralBasis) -> dict:
    if basis.kind == "cosine":
        m = basis.meta
        return {
            "type": "cosine",
            "d": basis.d,
            "n_per_dim": int(m["n_per_dim"]),
            "a": float(m["a"]),
            "b": float(m["b"]),
            "m_order": int(m["m_order"]),
        }
    if basis.kind == "nystrom" and "gaussian_params" in basis.meta:
        m = basis.meta
        gp = m["gaussian_params"]
        return {
            "type": "nystrom_gaussian",
            "d": basis.d,
            "gamma": float(gp.gamma),
            "lengthscale": float(gp.lengthscale),
            "grid_points_per_dim": int(m["grid_points_per_dim"]),
            "max_rank": m.get("max_rank"),
            "rel_threshold": float(m.get("rel_threshold", 1e-12)),
        }
    raise ValueError(f"basis of kind {basis.kind!r} is not serializable")


def build_basis_from_descriptor(desc: dict) -> SpectralBasis:
    """Rebuild a SpectralBasis from its serialized descriptor."""
    if desc["type"] == "cosine":
        params = ThinPlateParams(a=desc["a"], b=desc["b"], m_order=desc["m_order"])
        return build_cosine_basis(desc["d"], desc["n_per_dim"], params)
    if desc["type"] == "nystrom_gaussian":
        gp = GaussianKernelParams(gamma=desc["gamma"], lengthscale=desc["lengthscale"])
        cfg = NystromConfig(
            grid_points_per_dim=desc["grid_points_per_dim"],
            max_rank=desc.get("max_rank"),
            rel_threshold=desc.get("rel_threshold", 1e-12),
        )
        basis = nystrom_basis(
            lambda X, Z: gaussian_kernel_matrix(X, Z, gp), standard_domain(desc["d"]), cfg
        )
        basis.meta["gaussian_params"] = gp
        basis.meta["max_rank"] = cfg.max_rank
        basis.meta["rel_threshold"] = cfg.rel_threshold
        return basis
    raise ValueError(f"unknown basis descriptor type {desc['type']!r}")


def save_model(model: FittedModel, path: str | Path, config_echo: dict | None = None):
    """Write a versioned JSON document; Gram matrices are recomputed on load."""
    norm = model.data
    doc = {
        "format_version": FORMAT_VERSION,
        "basis": _basis_descriptor(model.basis),
        "domain": {
            "lower": norm.original_domain.lower.tolist(),
            "upper": norm.original_domain.upper.tolist(),
        },
        "jacobian": norm.jacobian,
        "points_std": norm.pattern.points.tolist(),
        "w_hat": model.w_hat.tolist(),
        "alpha_hat": model.alpha_hat.tolist(),
        "log_marginal_parts": model.log_marginal_parts,
        "objective_trace": model.objective_trace,
        "config": config_echo or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path: str | Path) -> FittedModel:
    """Load a model JSON and recompute the cached matrices."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    basis = build_basis_from_descriptor(doc["basis"])
    original = BoxDomain(np.asarray(doc["domain"]["lower"]), np.asarray(doc["domain"]["upper"]))
    std_pts = np.asarray(doc["points_std"], dtype=float).reshape(-1, basis.d)
    data = NormalizedPattern(
        PointPattern(std_pts, standard_domain(basis.d)), doc["jacobian"], original
    )
    w = np.asarray(doc["w_hat"], dtype=float)
    phi = basis.design_matrix(std_pts)
    model = _finalize(basis, data, w, phi, list(doc.get("objective_trace", [])))
    stored_alpha = np.asarray(doc["alpha_hat"], dtype=float)
    if stored_alpha.shape == model.alpha_hat.shape and len(stored_alpha):
        if float(np.max(np.abs(stored_alpha - model.alpha_hat))) > 1e-6 * (
            1.0 + float(np.max(np.abs(stored_alpha)))
        ):
            raise ValueError("stored dual weights disagree with recomputation")
    return model
