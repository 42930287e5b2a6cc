"""Planar geometry helpers: shoelace area, monotone-chain hull, point tests."""

from __future__ import annotations

import numpy as np


def shoelace_area(vertices) -> float:
    """Unsigned area of a simple polygon given as an (m, 2) vertex ring.

    A closing vertex equal to the first is allowed and ignored.
    """
    v = np.asarray(vertices, dtype=float)
    if len(v) >= 2 and np.array_equal(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Andrew's monotone chain. Counter-clockwise hull, no repeated endpoint.

    Collinear boundary points are dropped. Degenerate input returns fewer
    than three vertices (one point, or the two extremes of a segment).
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    pts = [tuple(p) for p in pts]  # np.unique already sorted lexicographically

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def is_convex_ccw(vertices) -> bool:
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        return False
    return all(_cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) > 0 for i in range(n))


def points_in_convex_polygon(points, hull, tol: float = 1e-12) -> np.ndarray:
    """Boolean mask of points inside (or on) a CCW convex polygon."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    h = np.asarray(hull, dtype=float)
    if len(h) < 3:
        return np.zeros(len(p), dtype=bool)
    a = h
    b = np.roll(h, -1, axis=0)
    # cross of edge (a->b) with (a->p) for every edge/point pair
    cross = (b[:, 0] - a[:, 0])[None, :] * (p[:, 1:2] - a[:, 1][None, :]) - (b[:, 1] - a[:, 1])[None, :] * (
        p[:, 0:1] - a[:, 0][None, :]
    )
    scale = max(1.0, float(np.abs(h).max()))
    return np.all(cross >= -tol * scale * scale, axis=1)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])
