"""Point patterns on box domains: data model, normalization, CSV I/O, splitting.

All model fitting happens on the standard domain [0, pi]^d. Patterns observed
on an arbitrary box are mapped there by an affine change of variables whose
jacobian converts intensity values back to original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "BoxDomain",
    "PointPattern",
    "NormalizedPattern",
    "DomainError",
    "ParseError",
    "standard_domain",
    "load_point_pattern",
    "save_point_pattern",
    "normalize",
    "denormalize_points",
    "bernoulli_split",
]


class DomainError(ValueError):
    """A point lies outside its declared domain, or the box is degenerate."""


class ParseError(ValueError):
    """A data file could not be parsed."""


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise DomainError("lower and upper must be 1-d vectors of equal length")
        if not np.all(upper > lower):
            raise DomainError(f"upper must exceed lower in every coordinate: {lower} vs {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask over rows of ``points`` (closed box)."""
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


def standard_domain(d: int) -> BoxDomain:
    """The internal fitting domain [0, pi]^d."""
    return BoxDomain(np.zeros(d), np.full(d, math.pi))


@dataclass(frozen=True)
class PointPattern:
    """A finite set of d-dimensional points inside a box domain.

    Empty patterns are valid; ``points`` always has shape (m, d).
    """

    points: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.domain.d)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[1] != self.domain.d:
            raise DomainError(
                f"points have dimension {pts.shape[1]}, domain has dimension {self.domain.d}"
            )
        inside = self.domain.contains(pts) if len(pts) else np.ones(0, dtype=bool)
        if not np.all(inside):
            bad = pts[~inside]
            raise DomainError(f"{len(bad)} point(s) outside domain, first offender: {bad[0]}")
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class NormalizedPattern:
    """A pattern mapped onto [0, pi]^d together with the change-of-variables jacobian.

    ``jacobian`` = pi^d / volume(original domain); intensity values convert back
    to original units as lambda_orig(x) = lambda_std(T(x)) * jacobian.
    """

    pattern: PointPattern
    jacobian: float
    original_domain: BoxDomain

    def __post_init__(self):
        if self.jacobian <= 0:
            raise DomainError("jacobian must be positive")

    @property
    def m(self) -> int:
        return self.pattern.m

    @property
    def d(self) -> int:
        return self.pattern.domain.d


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_point_pattern(path: str | Path, domain: BoxDomain) -> PointPattern:
    """Load a CSV point pattern: one point per row, d numeric columns.

    An optional single header row is detected by a non-numeric first token.
    Lines starting with '#' are ignored. Points outside the domain raise
    DomainError (no silent clipping).
    """
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if lines and not _is_number(lines[0][1].split(",")[0].strip()):
        lines = lines[1:]  # header row
    for lineno, ln in lines:
        tokens = [t.strip() for t in ln.split(",")]
        if len(tokens) != domain.d:
            raise ParseError(f"{path}:{lineno}: expected {domain.d} columns, got {len(tokens)}")
        try:
            row = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        rows.append(row)
    pts = np.asarray(rows, dtype=float).reshape(len(rows), domain.d)
    inside = domain.contains(pts) if len(pts) else np.ones(0, dtype=bool)
    if not np.all(inside):
        bad = pts[~inside]
        raise DomainError(f"{path}: {len(bad)} point(s) outside domain, e.g. {bad[0].tolist()}")
    return PointPattern(pts, domain)


def save_point_pattern(path: str | Path, pattern: PointPattern, header_comment: str | None = None):
    """Write a pattern as CSV with a header row x1,...,xd."""
    d = pattern.domain.d
    with open(path, "w", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(f"x{j + 1}" for j in range(d)) + "\n")
        for row in pattern.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def normalize(pattern: PointPattern) -> NormalizedPattern:
    """Affinely map a pattern onto [0, pi]^d, recording the jacobian."""
    dom = pattern.domain
    scale = math.pi / (dom.upper - dom.lower)
    std_pts = (pattern.points - dom.lower) * scale
    jac = math.pi ** dom.d / dom.volume()
    std = PointPattern(np.clip(std_pts, 0.0, math.pi), standard_domain(dom.d))
    return NormalizedPattern(std, jac, dom)


def denormalize_points(norm: NormalizedPattern, std_points: np.ndarray) -> np.ndarray:
    """Map points from [0, pi]^d back to the original domain."""
    dom = norm.original_domain
    pts = np.atleast_2d(np.asarray(std_points, dtype=float))
    return dom.lower + pts * (dom.upper - dom.lower) / math.pi


def bernoulli_split(
    pattern: PointPattern, p: float, seed: int
) -> tuple[PointPattern, PointPattern]:
    """Independently assign each point to the train set with probability ``p``.

    Uses numpy's PCG64 generator seeded with ``seed``; one uniform draw per
    point in point order, so the split is exchangeable under joint permutation
    of points and draws.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    rng = np.random.default_rng(seed)
    u = rng.random(pattern.m)
    keep = u < p
    return (
        PointPattern(pattern.points[keep], pattern.domain),
        PointPattern(pattern.points[~keep], pattern.domain),
    )
