"""Dense-region footprints in the instance space and the two area metrics.

Pipeline per population: automatic DBSCAN parameters, DBSCAN, one alpha
shape per cluster at its one-region critical alpha, union of the shapes.
Areas are shoelace sums over the union (exteriors minus holes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.base import BaseGeometry

from .geometry import shoelace_area

NOISE = -1
SNAP_GRID = 1e-9
BOUNDARY_TOL = 1e-7
EPS_FORMULAS = ("product", "dimension-root")


@dataclass(frozen=True)
class DbscanParams:
    k: int
    eps: float

    def __post_init__(self):
        if self.k < 3:
            raise ValueError(f"k must be >= 3, got {self.k}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


def dbscan_params(r: int, z1_range: float, z2_range: float, formula: str = "product") -> DbscanParams:
    """Automatic ``(k, eps)`` from the point count ``r`` and coordinate ranges.

    ``formula="product"`` evaluates ``k * Gamma(2) / sqrt(r * pi) * (range1 * range2)``
    literally. ``"dimension-root"`` takes the square root of the bracketed
    volume term instead, as in the original heuristic for d = 2.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if z1_range < 0 or z2_range < 0:
        raise ValueError("coordinate ranges must be non-negative")
    k = max(min(math.ceil(r / 20), 50), 3)
    volume = z1_range * z2_range
    if formula == "product":
        eps = k * math.gamma(2) / math.sqrt(r * math.pi) * volume
    elif formula == "dimension-root":
        eps = math.sqrt(volume * k * math.gamma(2) / (r * math.pi))
    else:
        raise ValueError(f"unknown eps formula {formula!r}; expected one of {EPS_FORMULAS}")
    # zero-extent point sets: keep eps positive so coincident points still neighbour
    return DbscanParams(k=k, eps=max(eps, np.finfo(float).tiny))


def params_for(points: np.ndarray, r: int, formula: str = "product", ranges=None) -> DbscanParams:
    if ranges is None:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        ranges = np.ptp(pts, axis=0)
    return dbscan_params(r, float(ranges[0]), float(ranges[1]), formula)


def _core_components(core_pts: np.ndarray, eps: float) -> np.ndarray:
    """Connected components of the eps-neighbourhood graph over core points.

    In the plane the Euclidean minimum spanning tree lives inside the Delaunay
    graph, so thresholding Delaunay edges at eps yields the same components
    as the full O(n^2) neighbourhood graph.
    """
    uniq, inverse = np.unique(core_pts, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    m = len(uniq)
    if m == 1:
        return np.zeros(len(core_pts), dtype=int)
    edges: list[np.ndarray] = []
    try:
        if m < 3:
            raise QhullError("too few points")
        tri = Delaunay(uniq)
        s = tri.simplices
        edges.append(np.concatenate([s[:, [0, 1]], s[:, [1, 2]], s[:, [2, 0]]]))
        in_tri = np.zeros(m, dtype=bool)
        in_tri[s.ravel()] = True
        loose = np.flatnonzero(~in_tri)
        if len(loose):
            _, nn = cKDTree(uniq).query(uniq[loose], k=2)
            edges.append(np.column_stack([loose, nn[:, 1]]))
    except QhullError:
        # collinear: the spanning tree is the chain of consecutive points
        direction = uniq[-1] - uniq[0]
        order = np.argsort(uniq @ direction, kind="stable")
        edges.append(np.column_stack([order[:-1], order[1:]]))
    e = np.concatenate(edges)
    length = np.linalg.norm(uniq[e[:, 0]] - uniq[e[:, 1]], axis=1)
    e = e[length <= eps]
    graph = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(m, m))
    _, comp = connected_components(graph, directed=False)
    return comp[inverse]


def dbscan(points, params: DbscanParams) -> np.ndarray:
    """DBSCAN with Euclidean distance. Returns labels, ``-1`` for noise.

    A point is core when at least ``k`` points (itself included) lie within
    ``eps``. Border points join the cluster of their nearest core point, which
    makes the result independent of visiting order. Cluster ids are numbered
    by the first point index that belongs to them.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    labels = np.full(n, NOISE, dtype=int)
    if n < params.k:
        return labels
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=params.k)
    core = dist[:, -1] <= params.eps
    if not core.any():
        return labels
    core_idx = np.flatnonzero(core)
    labels[core_idx] = _core_components(pts[core_idx], params.eps)

    border = np.flatnonzero(~core)
    if len(border):
        core_tree = cKDTree(pts[core_idx])
        d, j = core_tree.query(pts[border], k=1, distance_upper_bound=np.nextafter(params.eps, np.inf))
        hit = np.isfinite(d) & (d <= params.eps)
        labels[border[hit]] = labels[core_idx[j[hit]]]

    # renumber clusters in order of first appearance
    mapping: dict[int, int] = {}
    out = np.full(n, NOISE, dtype=int)
    for i, lab in enumerate(labels):
        if lab == NOISE:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def _circumradii(tri_pts: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(tri_pts[:, 1] - tri_pts[:, 2], axis=1)
    b = np.linalg.norm(tri_pts[:, 2] - tri_pts[:, 0], axis=1)
    c = np.linalg.norm(tri_pts[:, 0] - tri_pts[:, 1], axis=1)
    d1 = tri_pts[:, 1] - tri_pts[:, 0]
    d2 = tri_pts[:, 2] - tri_pts[:, 0]
    area2 = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = a * b * c / (2.0 * area2)
    return np.where(area2 > 0, r, np.inf)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def critical_alpha(points) -> tuple[float, Delaunay | None, np.ndarray]:
    """Smallest alpha radius giving a single region that touches every point.

    Triangles enter in order of circumradius; the sweep stops once all
    triangulated vertices are covered and the accepted triangles are
    edge-connected. Returns ``(alpha, triangulation, circumradii)``; alpha is
    0 and the triangulation ``None`` for degenerate (collinear/tiny) input.
    """
    uniq = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(uniq) < 3:
        return 0.0, None, np.empty(0)
    try:
        tri = Delaunay(uniq)
    except QhullError:
        return 0.0, None, np.empty(0)
    simplices = tri.simplices
    radii = _circumradii(uniq[simplices])
    usable = np.isfinite(radii)
    if not usable.any():
        return 0.0, None, np.empty(0)
    n_vertices = len(np.unique(simplices[usable]))
    order = np.argsort(radii, kind="stable")
    neighbors = tri.neighbors.tolist()
    simp = simplices.tolist()
    added = [False] * len(simp)
    covered = [False] * len(uniq)
    n_covered = 0
    components = 0
    dsu = _DisjointSet(len(simp))
    alpha = float(radii[order[-1]])
    for t in order.tolist():
        if not usable[t]:
            break
        added[t] = True
        components += 1
        for v in simp[t]:
            if not covered[v]:
                covered[v] = True
                n_covered += 1
        for nb in neighbors[t]:
            if nb >= 0 and added[nb] and dsu.union(t, nb):
                components -= 1
        if n_covered == n_vertices and components == 1:
            alpha = float(radii[t])
            break
    return alpha, tri, radii


def alpha_shape(points, alpha: float | None = None) -> BaseGeometry:
    """Alpha shape of a point cloud as a (multi)polygon.

    ``alpha`` is a circumradius threshold; ``None`` picks the critical alpha.
    Collinear or fewer than three distinct points give an empty polygon.
    """
    crit, tri, radii = critical_alpha(points)
    if tri is None:
        return Polygon()
    if alpha is None:
        alpha = crit
    keep = radii <= alpha
    if not keep.any():
        return Polygon()
    tris = tri.points[tri.simplices[keep]]
    polys = shapely.polygons(np.concatenate([tris, tris[:, :1]], axis=1))
    shape = shapely.coverage_union_all(polys)
    return shapely.set_precision(shape, SNAP_GRID)


def _polygons_of(geom: BaseGeometry) -> list[Polygon]:
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    return [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon) and not g.is_empty]


def geometry_area(geom: BaseGeometry) -> float:
    """Shoelace area of every polygon (exterior minus holes)."""
    total = 0.0
    for poly in _polygons_of(geom):
        total += shoelace_area(poly.exterior.coords)
        total -= sum(shoelace_area(h.coords) for h in poly.interiors)
    return max(total, 0.0)


@dataclass(frozen=True)
class Footprint:
    geometry: BaseGeometry = field(repr=False)
    area: float
    member_count: int

    @property
    def density(self) -> float:
        return self.member_count / self.area if self.area > 0 else 0.0

    @property
    def polygons(self) -> list[dict]:
        """Vertex lists per polygon: ``{"exterior": [...], "holes": [[...], ...]}``."""
        return [
            {
                "exterior": [list(p) for p in poly.exterior.coords[:-1]],
                "holes": [[list(p) for p in h.coords[:-1]] for h in poly.interiors],
            }
            for poly in _polygons_of(self.geometry)
        ]

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.geometry.is_empty:
            return np.zeros(len(pts), dtype=bool)
        return shapely.intersects_xy(self.geometry, pts[:, 0], pts[:, 1])

    def to_json(self) -> dict:
        return {"area": self.area, "member_count": self.member_count, "density": self.density, "polygons": self.polygons}

    def svg_path(self, transform=None) -> str:
        """SVG path data (``d`` attribute); holes render via the even-odd rule."""
        parts = []
        for poly in self.polygons:
            for ring in [poly["exterior"], *poly["holes"]]:
                pts = np.asarray(ring, dtype=float)
                if transform is not None:
                    pts = transform(pts)
                parts.append("M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in pts) + " Z")
        return " ".join(parts)

    @classmethod
    def empty(cls) -> "Footprint":
        return cls(Polygon(), 0.0, 0)


def _make_footprint(geom: BaseGeometry, points: np.ndarray) -> Footprint:
    fp = Footprint(geom, geometry_area(geom), 0)
    return Footprint(geom, fp.area, int(fp.contains(points).sum()))


def footprint(points, labels) -> Footprint:
    """Union of per-cluster alpha shapes. All-noise labels give an empty footprint."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    labels = np.asarray(labels)
    shapes = [alpha_shape(pts[labels == c]) for c in np.unique(labels[labels != NOISE])]
    shapes = [s for s in shapes if not s.is_empty]
    if not shapes:
        return Footprint.empty()
    geom = shapes[0] if len(shapes) == 1 else shapely.set_precision(shapely.union_all(shapes), SNAP_GRID)
    return _make_footprint(geom, pts)


def population_footprint(points, eps_formula: str = "product", ranges=None) -> Footprint:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return Footprint.empty()
    params = params_for(pts, len(pts), eps_formula, ranges)
    return footprint(pts, dbscan(pts, params))


def instance_footprint(coords, eps_formula: str = "product") -> Footprint:
    return population_footprint(coords, eps_formula)


def area_is(coords, eps_formula: str = "product") -> float:
    """Area of the dense footprint of all scenarios in the instance space."""
    return instance_footprint(coords, eps_formula).area


@dataclass(frozen=True)
class BugRegion:
    """Bug footprint after the purity rule, with the pieces it was built from."""

    raw: Footprint
    safe: Footprint
    result: Footprint
    kept_overlaps: list[dict]
    removed_overlaps: list[dict]

    @property
    def area(self) -> float:
        return self.result.area


def bug_region(coords, outcomes, eps_formula: str = "product") -> BugRegion:
    """Footprint of failing scenarios, minus overlaps dominated by safe ones.

    DBSCAN parameters use the failing (resp. safe) count as ``r`` and the
    coordinate ranges of the whole instance space. Each connected region of
    the bug/safe footprint intersection is kept only when it contains more
    failing than safe scenarios.
    """
    pts = np.asarray(coords, dtype=float).reshape(-1, 2)
    y = np.asarray(outcomes).astype(int).ravel()
    if len(y) != len(pts):
        raise ValueError("coords and outcomes differ in length")
    if not y.any():
        raise ValueError("area_bugs needs at least one failing scenario")
    ranges = np.ptp(pts, axis=0)
    bugs, safes = pts[y == 1], pts[y == 0]
    raw = population_footprint(bugs, eps_formula, ranges)
    safe = population_footprint(safes, eps_formula, ranges) if len(safes) else Footprint.empty()
    if raw.geometry.is_empty or safe.geometry.is_empty:
        return BugRegion(raw, safe, raw, [], [])

    overlap = shapely.set_precision(shapely.intersection(raw.geometry, safe.geometry), SNAP_GRID)
    # footprint vertices are data points, so many sit exactly on an overlap
    # boundary; a scale-relative tolerance keeps their counting stable
    tol = BOUNDARY_TOL * max(1.0, float(np.abs(pts).max()))
    bug_geoms, safe_geoms = shapely.points(bugs), shapely.points(safes)
    kept, removed, removed_geoms = [], [], []
    for region in _polygons_of(overlap):
        n_bug = int(shapely.dwithin(region, bug_geoms, tol).sum())
        n_safe = int(shapely.dwithin(region, safe_geoms, tol).sum())
        entry = {"area": geometry_area(region), "buggy": n_bug, "safe": n_safe}
        if n_bug > n_safe:
            kept.append(entry)
        else:
            removed.append(entry)
            removed_geoms.append(region)
    if removed_geoms:
        geom = shapely.set_precision(shapely.difference(raw.geometry, shapely.union_all(removed_geoms)), SNAP_GRID)
        result = _make_footprint(geom, bugs)
    else:
        result = raw
    return BugRegion(raw, safe, result, kept, removed)


def area_bugs(coords, outcomes, eps_formula: str = "product") -> float:
    return bug_region(coords, outcomes, eps_formula).area
