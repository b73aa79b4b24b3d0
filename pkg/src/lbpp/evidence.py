"""Approximate log marginal likelihood and ML-II hyperparameter search.

The evidence decomposes as

    total = data_term - quadratic_term/2 + (v_term - logdet_s + m log 2)/2,

where v_term = sum_i log 1/(1 + lambda_i) depends only on the prior spectrum
and acts as the complexity penalty, and logdet_s is the log determinant of
S = K~ .* (alpha alpha') + 2I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .domain import NormalizedPattern
from .fit import ConvergenceError, FitOptions, FittedModel, fit_mode

__all__ = [
    "MarginalParts",
    "SearchSpace",
    "SearchError",
    "log_marginal",
    "ml2_search",
    "cosine_basis_family",
]


class SearchError(RuntimeError):
    """Every hyperparameter candidate failed to converge."""


@dataclass(frozen=True)
class MarginalParts:
    data_term: float
    quadratic_term: float
    v_term: float
    logdet_s: float
    constant: float

    def __post_init__(self):
        if self.v_term > 1e-12:
            raise ValueError("v_term must be nonpositive")
        if self.logdet_s < self.constant - 1e-10:
            raise ValueError("logdet_s cannot fall below m log 2 (S dominates 2I)")

    @property
    def total(self) -> float:
        return (
            self.data_term
            - 0.5 * self.quadratic_term
            + 0.5 * (self.v_term - self.logdet_s + self.constant)
        )


def log_marginal(model: FittedModel) -> tuple[float, MarginalParts]:
    """Approximate log marginal likelihood of a fitted model, with its parts."""
    p = model.log_marginal_parts
    if not p:
        raise ValueError("model carries no marginal-likelihood decomposition (prior model?)")
    parts = MarginalParts(
        data_term=p["data_term"],
        quadratic_term=p["quadratic_term"],
        v_term=p["v_term"],
        logdet_s=p["logdet_s"],
        constant=p["constant"],
    )
    return parts.total, parts


@dataclass(frozen=True)
class SearchSpace:
    """Log10-scale box for named hyperparameters plus a search strategy."""

    names: tuple[str, ...]
    log10_bounds: tuple[tuple[float, float], ...]
    strategy: str = "grid"
    budget: int = 32

    def __post_init__(self):
        if len(self.names) != len(self.log10_bounds):
            raise ValueError("one bound pair per parameter name")
        for lo, hi in self.log10_bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds must be finite with lower < upper: ({lo}, {hi})")
        if self.strategy not in ("grid", "nelder_mead"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def grid_candidates(self) -> list[dict]:
        k = len(self.names)
        per_axis = max(1, int(math.floor(self.budget ** (1.0 / k))))
        axes = [np.logspace(lo, hi, per_axis) for lo, hi in self.log10_bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([g.ravel() for g in mesh], axis=1)
        return [dict(zip(self.names, row)) for row in flat]


def cosine_basis_family(d: int, n_per_dim: int, m_order: int = 2, tie_ab: bool = False):
    """Basis factory over hyperparameters a, b (or a single tied value ``ab``)."""
    from .basis import ThinPlateParams, build_cosine_basis

    def make(**hp):
        if tie_ab:
            a = b = hp["ab"]
        else:
            a, b = hp["a"], hp["b"]
        return build_cosine_basis(d, n_per_dim, ThinPlateParams(a=a, b=b, m_order=m_order))

    return make


def ml2_search(
    data: NormalizedPattern,
    basis_family: Callable[..., "object"],
    space: SearchSpace,
    fit_opts: FitOptions = FitOptions(),
    extra_candidates: Sequence[dict] = (),
) -> tuple[dict, list[dict]]:
    """Maximise the approximate evidence over a hyperparameter space.

    ``basis_family(**candidate)`` must return a SpectralBasis. Returns the
    best candidate and a table of per-candidate rows (sorted by total,
    descending; failed candidates carry an ``error`` field and sort last).
    Ties break by candidate order.
    """
    if space.strategy == "grid":
        candidates = space.grid_candidates() + list(extra_candidates)
        table = [_evaluate(data, basis_family, c, fit_opts) for c in candidates]
    else:
        table = _nelder_mead(data, basis_family, space, fit_opts)
    ok = [row for row in table if "error" not in row]
    if not ok:
        raise SearchError(
            "all candidates failed: " + "; ".join(str(r["error"]) for r in table)
        )
    # stable sort keeps candidate order among ties; failures last
    table_sorted = sorted(
        table, key=lambda r: -r["total"] if "error" not in r else math.inf
    )
    best = max(ok, key=lambda r: (r["total"], -r["order"]))
    return dict(best["params"]), table_sorted


def _evaluate(data, basis_family, params: dict, fit_opts, order_counter=[0]) -> dict:
    row = {"params": dict(params), "order": order_counter[0]}
    order_counter[0] += 1
    try:
        basis = basis_family(**params)
        model = fit_mode(basis, data, fit_opts)
        total, parts = log_marginal(model)
        row.update(
            total=total,
            data_term=parts.data_term,
            quadratic_term=parts.quadratic_term,
            v_term=parts.v_term,
            logdet_s=parts.logdet_s,
        )
    except (ConvergenceError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _nelder_mead(data, basis_family, space: SearchSpace, fit_opts) -> list[dict]:
    table: list[dict] = []
    lows = np.array([lo for lo, _ in space.log10_bounds])
    highs = np.array([hi for _, hi in space.log10_bounds])

    def objective(logx: np.ndarray) -> float:
        if len(table) >= space.budget:
            raise StopIteration
        clipped = np.clip(logx, lows, highs)
        params = {n: 10.0**v for n, v in zip(space.names, clipped)}
        row = _evaluate(data, basis_family, params, fit_opts)
        table.append(row)
        if "error" in row:
            return 1e300
        # quadratic penalty keeps the simplex inside the bounds
        penalty = 1e6 * float(np.sum((logx - clipped) ** 2))
        return -row["total"] + penalty

    x0 = 0.5 * (lows + highs)
    try:
        scipy.optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxfev": space.budget, "xatol": 1e-3, "fatol": 1e-6},
        )
    except StopIteration:
        pass
    return table


def write_candidate_table(path, table: list[dict], config_echo: str | None = None):
    """Emit the ML-II candidate table as CSV."""
    import csv

    names = sorted({k for row in table for k in row["params"]})
    cols = names + ["data_term", "quadratic_term", "v_term", "logdet_s", "total", "error"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if config_echo:
            fh.write(f"# config: {config_echo}\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in table:
            writer.writerow(
                [row["params"].get(n, "") for n in names]
                + [row.get(k, "") for k in cols[len(names):]]
            )
