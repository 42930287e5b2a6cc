"""Choose the feature subset with the most impact on test outcome.

Features are clustered by correlation distance, one representative per
cluster forms a candidate set, each set is flattened to a temporary 2-D PCA
space and scored by cross-validated random-forest error on the outcome.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.cluster import KMeans
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import silhouette_score
from sklearn.model_selection import StratifiedKFold

from .dataset import TestSuite, pearson_correlation, standardize

log = logging.getLogger(__name__)


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureClustering:
    k: int
    assignments: tuple[int, ...]
    silhouette: float

    def clusters(self) -> list[list[int]]:
        return [[f for f, c in enumerate(self.assignments) if c == j] for j in range(self.k)]


@dataclass(frozen=True)
class CombinationScore:
    feature_set: tuple[int, ...]
    cv_error: float


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    clustering: FeatureClustering | None
    scores: tuple[CombinationScore, ...]
    scored_rows: int


def correlation_distance(features) -> np.ndarray:
    """``1 - |r|`` between feature columns."""
    d = 1.0 - np.abs(pearson_correlation(features).values)
    np.fill_diagonal(d, 0.0)
    return np.clip(d, 0.0, 1.0)


def _embed(dist: np.ndarray) -> np.ndarray:
    """Classical MDS embedding so k-means sees the correlation distances."""
    n = len(dist)
    J = np.eye(n) - 1.0 / n
    G = -0.5 * J @ (dist**2) @ J
    vals, vecs = np.linalg.eigh(G)
    keep = vals > 1e-12 * max(1.0, vals.max())
    if not keep.any():
        return np.zeros((n, 1))
    return vecs[:, keep] * np.sqrt(vals[keep])


def default_k_candidates(n_features: int) -> list[int]:
    return list(range(2, min(10, n_features - 1) + 1))


def _silhouette(dist: np.ndarray, labels: np.ndarray) -> float:
    n_labels = len(np.unique(labels))
    if n_labels < 2 or n_labels >= len(labels) or not np.any(dist > 0):
        return 0.0
    return float(silhouette_score(dist, labels, metric="precomputed"))


def cluster_features(suite: TestSuite, k_candidates: Sequence[int] | None = None, seed: int = 0) -> FeatureClustering:
    """k-means over features, k chosen by mean silhouette (ties to smaller k)."""
    n = suite.n_features
    if n < 3:
        raise SelectionError(f"feature clustering needs at least 3 features, got {n}")
    if k_candidates is None:
        k_candidates = default_k_candidates(n)
    k_candidates = sorted(set(int(k) for k in k_candidates))
    if not k_candidates:
        raise SelectionError("k_candidates is empty")
    bad = [k for k in k_candidates if not 2 <= k < n]
    if bad:
        raise SelectionError(f"k candidates {bad} outside [2, {n - 1}]")

    dist = correlation_distance(suite.features)
    points = _embed(dist)
    best: FeatureClustering | None = None
    for k in k_candidates:
        labels = _kmeans_labels(points, k, seed)
        score = _silhouette(dist, labels)
        log.debug("k=%d silhouette=%.4f", k, score)
        if best is None or score > best.silhouette:
            best = FeatureClustering(k, tuple(int(v) for v in labels), score)
    return best


def _kmeans_labels(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    n = len(points)
    distinct = len(np.unique(np.round(points, 12), axis=0))
    if distinct < k:
        # not enough distinct points for k non-empty clusters; spread by index
        labels = np.arange(n) % k
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            labels = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(points).labels_
    # canonical numbering: order of first appearance
    order: dict[int, int] = {}
    for lab in labels:
        order.setdefault(int(lab), len(order))
    return np.array([order[int(lab)] for lab in labels])


def enumerate_combinations(clustering: FeatureClustering, cap: int = 10_000, seed: int = 0) -> list[tuple[int, ...]]:
    """One feature per cluster. Above ``cap`` a seeded uniform sample of
    ``cap`` distinct combinations is drawn. Each set is sorted ascending."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    clusters = clustering.clusters()
    sizes = [len(c) for c in clusters]
    total = math.prod(sizes)
    if total <= cap:
        return sorted(tuple(sorted(c)) for c in itertools.product(*clusters))
    rng = np.random.default_rng(seed)
    flat = rng.choice(total, size=cap, replace=False) if total < 2**62 else None
    if flat is None:
        chosen: set[tuple[int, ...]] = set()
        while len(chosen) < cap:
            chosen.add(tuple(sorted(int(rng.choice(c)) for c in clusters)))
        return sorted(chosen)
    combos = []
    for code in flat.tolist():
        pick = []
        for c in reversed(clusters):
            code, j = divmod(code, len(c))
            pick.append(c[j])
        combos.append(tuple(sorted(pick)))
    return sorted(combos)


def pca_2d(matrix) -> np.ndarray:
    """Z-score, then project onto the top two covariance eigenvectors.

    Each component's sign makes its largest-magnitude loading positive.
    With a single column the second coordinate is zero.
    """
    Xs, _, _ = standardize(matrix)
    cov = np.cov(Xs, rowvar=False, bias=True).reshape(Xs.shape[1], Xs.shape[1])
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1][:2]
    comps = vecs[:, order]
    for j in range(comps.shape[1]):
        i = int(np.argmax(np.abs(comps[:, j])))
        if comps[i, j] < 0:
            comps[:, j] *= -1
    out = Xs @ comps
    if out.shape[1] < 2:
        out = np.column_stack([out, np.zeros(len(out))])
    return out


def score_combination(
    suite: TestSuite,
    feature_set: Sequence[int],
    folds: int = 5,
    seed: int = 0,
    trees: int = 100,
) -> CombinationScore:
    """Cross-validated random-forest misclassification on the PCA plane."""
    feature_set = tuple(int(f) for f in feature_set)
    if len(feature_set) < 2:
        raise SelectionError("a feature set needs at least 2 features")
    if folds < 2:
        raise SelectionError("folds must be >= 2")
    y = np.asarray(suite.outcomes, dtype=int)
    counts = np.bincount(y, minlength=2)
    if counts.min() == 0:
        raise SelectionError("both outcome classes are required")
    if counts.min() < folds:
        raise SelectionError(f"the minority class has {counts.min()} scenarios, fewer than {folds} folds")
    coords = pca_2d(suite.features[:, list(feature_set)])
    errors = []
    for train, test in StratifiedKFold(folds, shuffle=True, random_state=seed).split(coords, y):
        rf = RandomForestClassifier(n_estimators=trees, criterion="gini", max_depth=None, random_state=seed)
        rf.fit(coords[train], y[train])
        errors.append(float(np.mean(rf.predict(coords[test]) != y[test])))
    return CombinationScore(feature_set, float(np.mean(errors)))


def stratified_subsample(outcomes, max_rows: int, seed: int) -> np.ndarray:
    """Row indices of a seeded class-proportional subsample (sorted)."""
    y = np.asarray(outcomes)
    n = len(y)
    if not max_rows or n <= max_rows:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    picked = []
    for cls in (0, 1):
        rows = np.flatnonzero(y == cls)
        take = int(round(len(rows) * max_rows / n))
        take = min(len(rows), max(take, 1)) if len(rows) else 0
        picked.append(rng.choice(rows, size=take, replace=False))
    return np.sort(np.concatenate(picked))


def select_features(
    suite: TestSuite,
    k_candidates: Sequence[int] | None = None,
    trees: int = 100,
    folds: int = 5,
    cap: int = 10_000,
    seed: int = 0,
    max_rows: int | None = 500,
) -> SelectionResult:
    """Feature set with the lowest cross-validated error (ties: lexicographic).

    Scoring runs on a seeded stratified subsample of at most ``max_rows``
    scenarios (``None`` or 0 uses every row). Suites with fewer than three
    features skip clustering and keep every feature.
    """
    counts = np.bincount(np.asarray(suite.outcomes, dtype=int), minlength=2)
    if counts.min() == 0:
        raise SelectionError("both outcome classes are required for feature selection")
    if suite.n_features < 2:
        raise SelectionError("at least 2 features are required")
    if suite.n_features < 3:
        return SelectionResult(tuple(range(suite.n_features)), None, (), suite.n_scenarios)

    clustering = cluster_features(suite, k_candidates, seed)
    combos = enumerate_combinations(clustering, cap, seed)
    rows = stratified_subsample(suite.outcomes, max_rows or 0, seed)
    scoring_suite = suite.subset(rows) if len(rows) < suite.n_scenarios else suite
    if len(combos) == 1:
        scores = (CombinationScore(combos[0], float("nan")),)
    else:
        scores = tuple(score_combination(scoring_suite, c, folds, seed, trees) for c in combos)
    best = min(scores, key=lambda s: (s.cv_error if not math.isnan(s.cv_error) else 0.0, s.feature_set))
    log.info("selected features %s (k=%d, %d combinations)", best.feature_set, clustering.k, len(combos))
    return SelectionResult(best.feature_set, clustering, scores, len(rows))
