"""Planar sector, annular-sector and rectangle geometry.

Angles are kept unwrapped (points live on the covering manifold r > 0,
t in R), so reflections never fold back across 2*pi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundaryKind",
    "BoundaryPiece",
    "CylCoord",
    "RectDomain",
    "SectorDomain",
    "classify_boundary",
    "extend_even",
    "reflect",
]


@dataclass(frozen=True)
class SectorDomain:
    """{r_inner < r < r_outer, 0 < theta < beta}; r_inner = 0 is the disc sector."""

    r_inner: float
    r_outer: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.r_inner < self.r_outer and math.isfinite(self.r_outer)):
            raise ValueError(f"need 0 <= r_inner < r_outer, got {self.r_inner}, {self.r_outer}")
        if not 0.0 < self.beta < 2.0 * math.pi:
            raise ValueError(f"opening must lie in (0, 2pi), got {self.beta}")

    @property
    def is_disc(self) -> bool:
        return self.r_inner == 0.0

    def with_beta(self, beta: float) -> "SectorDomain":
        return SectorDomain(self.r_inner, self.r_outer, beta)


@dataclass(frozen=True)
class RectDomain:
    """(0, beta) x (0, width): Neumann ends at x1 = 0, beta; Dirichlet long sides."""

    beta: float
    width: float

    def __post_init__(self):
        if not (self.beta > 0 and self.width > 0):
            raise ValueError(f"rectangle sides must be positive, got {self.beta}, {self.width}")


@dataclass(frozen=True)
class CylCoord:
    r: float
    theta: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r}")


class BoundaryKind(enum.Enum):
    GAMMA_THETA = "GammaTheta"
    ARC_OUTER = "ArcOuter"
    ARC_INNER = "ArcInner"
    DIRICHLET_SIDE = "DirichletSide"
    NEUMANN_END = "NeumannEnd"
    INTERIOR = "Interior"
    EXTERIOR = "Exterior"


@dataclass(frozen=True)
class BoundaryPiece:
    kind: BoundaryKind
    angle: float | None = None

    def __str__(self):
        if self.kind is BoundaryKind.GAMMA_THETA:
            return f"GammaTheta({self.angle:g})"
        return self.kind.value


def reflect(alpha: float, p: CylCoord) -> CylCoord:
    """Reflection across the ray theta = alpha: (r, t) -> (r, 2 alpha - t)."""
    return CylCoord(p.r, 2.0 * alpha - p.theta)


def classify_boundary(dom: SectorDomain, p: CylCoord, tol: float = 1e-9) -> BoundaryPiece:
    """Locate ``p`` relative to the closed sector.

    Dirichlet arcs take precedence over the radial edges at corners, matching
    how arc nodes are eliminated during assembly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r, t = p.r, p.theta
    if (
        r > dom.r_outer + tol
        or (not dom.is_disc and r < dom.r_inner - tol)
        or t < -tol
        or t > dom.beta + tol
    ):
        return BoundaryPiece(BoundaryKind.EXTERIOR)
    if abs(r - dom.r_outer) <= tol:
        return BoundaryPiece(BoundaryKind.ARC_OUTER)
    if not dom.is_disc and abs(r - dom.r_inner) <= tol:
        return BoundaryPiece(BoundaryKind.ARC_INNER)
    if abs(t) <= tol:
        return BoundaryPiece(BoundaryKind.GAMMA_THETA, 0.0)
    if abs(t - dom.beta) <= tol:
        return BoundaryPiece(BoundaryKind.GAMMA_THETA, dom.beta)
    return BoundaryPiece(BoundaryKind.INTERIOR)


def classify_rect(dom: RectDomain, x1: float, x2: float, tol: float = 1e-9) -> BoundaryPiece:
    if x1 < -tol or x1 > dom.beta + tol or x2 < -tol or x2 > dom.width + tol:
        return BoundaryPiece(BoundaryKind.EXTERIOR)
    if abs(x2) <= tol or abs(x2 - dom.width) <= tol:
        return BoundaryPiece(BoundaryKind.DIRICHLET_SIDE)
    if abs(x1) <= tol or abs(x1 - dom.beta) <= tol:
        return BoundaryPiece(BoundaryKind.NEUMANN_END)
    return BoundaryPiece(BoundaryKind.INTERIOR)


def extend_even(values: np.ndarray, which: str) -> np.ndarray:
    """Even reflection of an (n_r, n_theta) nodal array across an edge column.

    ``which`` is "start" (across theta = 0) or "end" (across theta = beta).
    The edge column is shared, so the result has 2*n_theta - 1 columns and
    the original data sits unchanged in the right (resp. left) half.
    """
    v = np.asarray(values)
    if v.ndim != 2 or v.shape[1] < 2:
        raise ValueError("expected an (n_r, n_theta) array with n_theta >= 2")
    if which == "start":
        return np.concatenate([v[:, :0:-1], v], axis=1)
    if which == "end":
        return np.concatenate([v, v[:, -2::-1]], axis=1)
    raise ValueError(f"which must be 'start' or 'end', got {which!r}")


def mirror_index(j: int, n_theta: int) -> int:
    """Fold an unwrapped column index onto 0..n_theta-1 by even reflection."""
    period = 2 * (n_theta - 1)
    j = j % period
    return j if j < n_theta else period - j
