"""Independent reference computations used as test oracles.

Nothing here imports shapely or the package's geometry code.
"""

import numpy as np


def rings_of(fp_polygons):
    """Flatten the package's polygon dicts into a list of vertex rings."""
    rings = []
    for poly in fp_polygons:
        rings.append(np.asarray(poly["exterior"], dtype=float))
        rings.extend(np.asarray(h, dtype=float) for h in poly["holes"])
    return rings


def even_odd_inside(points, rings, chunk=20000):
    """Even-odd ray casting against every edge of every ring."""
    pts = np.asarray(points, dtype=float)
    edges = []
    for ring in rings:
        a = ring
        b = np.roll(ring, -1, axis=0)
        edges.append(np.concatenate([a, b], axis=1))
    if not edges:
        return np.zeros(len(pts), dtype=bool)
    E = np.concatenate(edges)
    x1, y1, x2, y2 = (E[:, i][None, :] for i in range(4))
    inside = np.zeros(len(pts), dtype=bool)
    for s in range(0, len(pts), chunk):
        px = pts[s : s + chunk, 0:1]
        py = pts[s : s + chunk, 1:2]
        straddle = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        hits = straddle & (px < xcross)
        inside[s : s + chunk] = (hits.sum(axis=1) % 2) == 1
    return inside


def monte_carlo_area(rings, n=100_000, seed=0):
    allpts = np.concatenate(rings)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    rng = np.random.default_rng(seed)
    samples = lo + rng.uniform(size=(n, 2)) * (hi - lo)
    frac = even_odd_inside(samples, rings).mean()
    return float(frac * np.prod(hi - lo))


def qhull_area(points):
    from scipy.spatial import ConvexHull

    return float(ConvexHull(np.asarray(points, dtype=float)).volume)


def naive_objective(F, Y, A, B, C):
    """||F - B Z||^2 + ||Y - C Z||^2 with Z = A F, by explicit loops (columns = instances)."""
    n, i_count = len(F), len(F[0])
    total = 0.0
    Z = [[sum(A[r][k] * F[k][c] for k in range(n)) for c in range(i_count)] for r in range(2)]
    for k in range(n):
        for c in range(i_count):
            est = B[k][0] * Z[0][c] + B[k][1] * Z[1][c]
            total += (F[k][c] - est) ** 2
    for c in range(i_count):
        est = C[0][0] * Z[0][c] + C[0][1] * Z[1][c]
        total += (Y[c] - est) ** 2
    return total


def pearson_loop(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / (sxx * syy) ** 0.5


def average_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def ncd_recursive(lengths, idx):
    """Exhaustive recursive max of NCD1 over the subset lattice (memo-free, small sets only)."""
    def ncd1(s):
        if len(s) < 2:
            return 0.0
        whole = lengths(s)
        smallest = min(lengths((i,)) for i in s)
        largest = max(lengths(s[:p] + s[p + 1 :]) for p in range(len(s)))
        return (whole - smallest) / largest

    best = ncd1(idx)
    if len(idx) > 2:
        for p in range(len(idx)):
            best = max(best, ncd_recursive(lengths, idx[:p] + idx[p + 1 :]))
    return best
