"""Reachable-space boundary: hypercube corners from feature bounds, minus
corners that contradict strong correlations, projected and hulled."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CorrelationMatrix, FeatureBounds
from .geometry import convex_hull, points_in_convex_polygon, shoelace_area
from .pilot import ProjectionModel, project

MAX_BOUNDED_FEATURES = 20


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryHull:
    vertices_2d: np.ndarray
    area_bound: float
    kept_vertex_count: int
    pruned_vertex_count: int

    def contains(self, points) -> np.ndarray:
        return points_in_convex_polygon(points, self.vertices_2d)

    def to_json(self) -> dict:
        return {
            "vertices": self.vertices_2d.tolist(),
            "area_bound": self.area_bound,
            "kept_vertex_count": self.kept_vertex_count,
            "pruned_vertex_count": self.pruned_vertex_count,
        }


def vertex_pattern(n: int) -> np.ndarray:
    """(2^n, n) boolean table; True selects the upper bound. Row j is the
    binary expansion of j with feature 0 as the most significant bit."""
    if n > MAX_BOUNDED_FEATURES:
        raise BoundaryError(f"{n} features exceed the exact-enumeration cap of {MAX_BOUNDED_FEATURES}")
    codes = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(bool)


def build_vertices(bounds: FeatureBounds) -> np.ndarray:
    """Every corner of the box ``[lower, upper]``: a (2^n, n) matrix."""
    pattern = vertex_pattern(len(bounds.lower))
    return np.where(pattern, bounds.upper, bounds.lower)


def prune_mask(pattern: np.ndarray, corr: CorrelationMatrix, threshold: float = 0.7) -> np.ndarray:
    """Keep-mask over vertex patterns for the correlation rule.

    Positive pairs (r >= threshold) may not mix an upper with a lower bound;
    negative pairs (r <= -threshold) may not share the same side.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    r = np.asarray(corr.values if isinstance(corr, CorrelationMatrix) else corr, dtype=float)
    n = pattern.shape[1]
    keep = np.ones(len(pattern), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if r[i, j] >= threshold:
                keep &= pattern[:, i] == pattern[:, j]
            elif r[i, j] <= -threshold:
                keep &= pattern[:, i] != pattern[:, j]
    return keep


def _vertex_pattern_of(vertices: np.ndarray, bounds: FeatureBounds | None) -> np.ndarray:
    if bounds is None:
        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    else:
        lo, hi = bounds.lower, bounds.upper
    return np.isclose(vertices, hi) & ~np.isclose(lo, hi)


def prune_vertices(vertices, corr: CorrelationMatrix, threshold: float = 0.7, bounds: FeatureBounds | None = None):
    """Drop vertices that combine bounds forbidden by strong correlations.

    Which side each coordinate sits on is read against ``bounds`` (default:
    the per-column extremes of ``vertices``). Features with equal bounds sit
    on the lower side and are therefore never in conflict under the positive
    rule.
    """
    v = np.asarray(vertices, dtype=float)
    if len(v) == 0:
        return v
    return v[prune_mask(_vertex_pattern_of(v, bounds), corr, threshold)]


def offending_pairs(corr: CorrelationMatrix, threshold: float) -> list[tuple[int, int, float]]:
    r = np.asarray(corr.values, dtype=float)
    n = len(r)
    return [(i, j, float(r[i, j])) for i in range(n) for j in range(i + 1, n) if abs(r[i, j]) >= threshold]


def boundary_hull(
    model: ProjectionModel,
    bounds: FeatureBounds,
    corr: CorrelationMatrix,
    threshold: float = 0.7,
) -> BoundaryHull:
    """Convex hull of the projected surviving vertices.

    The map is linear, so hulling projected corners equals projecting the
    hull of the box edges.
    """
    pattern = vertex_pattern(len(bounds.lower))
    keep = prune_mask(pattern, corr, threshold)
    kept = np.where(pattern[keep], bounds.upper, bounds.lower)
    if len(kept) < 3:
        pairs = ", ".join(f"({i},{j}: r={r:+.3f})" for i, j, r in offending_pairs(corr, threshold))
        raise BoundaryError(f"only {len(kept)} hypercube vertices survive pruning; responsible pairs: {pairs or 'none'}")
    hull = convex_hull(project(model, kept))
    if len(hull) < 3:
        raise BoundaryError("projected boundary vertices are collinear")
    area = shoelace_area(hull)
    if not area > 0:
        raise BoundaryError("projected boundary has zero area")
    return BoundaryHull(hull, area, int(keep.sum()), int((~keep).sum()))


def coverage(area_is: float, hull: BoundaryHull | float) -> float:
    """Percent of the bounded area occupied by the instance footprint."""
    bound = hull.area_bound if isinstance(hull, BoundaryHull) else float(hull)
    if not bound > 0:
        raise BoundaryError("bounded area is zero")
    if area_is < 0:
        raise ValueError("area_is must be non-negative")
    return 100.0 * area_is / bound
