"""Baseline diversity metrics: Shannon evenness, Euclidean diversity,
multiset NCD and the STD norm."""

from __future__ import annotations

import bz2
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dataset import TestSuite, minmax_normalize

METRICS = ("shannon", "euclidean", "ncd", "std")

Compressor = Callable[[bytes], int]


def bz2_length(data: bytes) -> int:
    return len(bz2.compress(data, 9))


@dataclass(frozen=True)
class DiversityValue:
    metric: str
    value: float
    per_feature: Optional[np.ndarray] = None
    approximate: bool = False

    def to_json(self) -> dict:
        out = {"metric": self.metric, "value": self.value}
        if self.per_feature is not None:
            out["per_feature"] = [float(v) for v in self.per_feature]
        if self.metric == "ncd":
            out["approximate"] = self.approximate
        return out


def _features(suite) -> np.ndarray:
    if isinstance(suite, TestSuite):
        return suite.features
    return np.atleast_2d(np.asarray(suite, dtype=float))


def evenness(counts) -> float:
    """Shannon index of ``counts`` divided by ln(number of occupied categories)."""
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    s = len(counts)
    if s <= 1:
        return 0.0
    p = counts / counts.sum()
    h = -float(np.sum(p * np.log(p)))
    return h / math.log(s)


def feature_counts(column, bins: int = 10) -> np.ndarray:
    """Category counts for one feature.

    Features with at most ``bins`` distinct values are treated as categorical
    and counted exactly; others go into ``bins`` equal-width bins over the
    observed range.
    """
    values, counts = np.unique(np.asarray(column, dtype=float), return_counts=True)
    if len(values) <= bins:
        return counts
    hist, _ = np.histogram(column, bins=bins, range=(values[0], values[-1]))
    return hist


def shannon_evenness(suite, bins: int = 10) -> DiversityValue:
    f = _features(suite)
    if f.size == 0:
        raise ValueError("shannon_evenness needs a non-empty suite")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    per = np.array([evenness(feature_counts(f[:, k], bins)) for k in range(f.shape[1])])
    return DiversityValue("shannon", float(per.mean()), per)


def _sum_abs_pairwise(x: np.ndarray) -> float:
    """Sum over ordered pairs (i, j) of |x_i - x_j|, in O(n log n)."""
    s = np.sort(x)
    n = len(s)
    coef = 2.0 * np.arange(n) - (n - 1)
    return 2.0 * float(np.dot(coef, s))


def euclidean_diversity(suite) -> DiversityValue:
    """Mean over scenarios of the summed pairwise feature-averaged distance.

    ``per_feature[k]`` is feature k's share of the suite value, so the
    contributions sum to ``value``.
    """
    f = _features(suite)
    ns, m = f.shape
    if ns < 2 or m == 0:
        return DiversityValue("euclidean", 0.0, np.zeros(m))
    norm = minmax_normalize(f)
    per = np.array([_sum_abs_pairwise(norm[:, k]) for k in range(m)]) / (m * ns)
    return DiversityValue("euclidean", float(per.sum()), per)


def euclidean_scenario_diversity(suite) -> np.ndarray:
    """Per-scenario summed diversity. O(ns^2 m) memory-light loop, for small suites."""
    norm = minmax_normalize(_features(suite))
    m = norm.shape[1]
    return np.array([np.abs(norm - row).sum() / m for row in norm])


def std_metric(suite) -> DiversityValue:
    f = _features(suite)
    if f.shape[0] == 0:
        raise ValueError("std_metric needs at least one scenario")
    per = minmax_normalize(f).std(axis=0)
    return DiversityValue("std", float(np.linalg.norm(per)), per)


def serialize_rows(rows) -> list[bytes]:
    """One comma-separated line per scenario, 6 decimal places."""
    return [(",".join(f"{v:.6f}" for v in row) + "\n").encode() for row in np.atleast_2d(rows)]


class _MultisetCompressor:
    """Compressed length of sub-multisets, memoised on the sorted line tuple."""

    def __init__(self, lines: list[bytes], compressor: Compressor):
        self.lines = lines
        self.compressor = compressor
        self._cache: dict[tuple[bytes, ...], int] = {}

    def length(self, idx) -> int:
        key = tuple(sorted(self.lines[i] for i in idx))
        hit = self._cache.get(key)
        if hit is None:
            try:
                hit = int(self.compressor(b"".join(key)))
            except Exception as exc:  # any compressor fault is fatal for the metric
                raise RuntimeError(f"compressor failed: {exc}") from exc
            self._cache[key] = hit
        return hit

    def ncd1(self, idx: tuple[int, ...]) -> float:
        if len(idx) < 2:
            return 0.0
        whole = self.length(idx)
        smallest = min(self.length((i,)) for i in idx)
        largest_minus_one = max(self.length(idx[:p] + idx[p + 1 :]) for p in range(len(idx)))
        return (whole - smallest) / largest_minus_one


def ncd1(rows, compressor: Compressor = bz2_length) -> float:
    rows = np.atleast_2d(rows)
    mc = _MultisetCompressor(serialize_rows(rows), compressor)
    return mc.ncd1(tuple(range(len(rows))))


def ncd_exact(rows, compressor: Compressor = bz2_length) -> float:
    """Maximum NCD1 over every sub-multiset with at least two members."""
    rows = np.atleast_2d(rows)
    mc = _MultisetCompressor(serialize_rows(rows), compressor)
    n = len(rows)
    best = 0.0
    for size in range(2, n + 1):
        for idx in itertools.combinations(range(n), size):
            best = max(best, mc.ncd1(idx))
    return best


def ncd_greedy(rows, compressor: Compressor = bz2_length) -> float:
    """Descend from the full multiset, each step dropping the element whose
    removal leaves the largest NCD1; returns the best value seen."""
    rows = np.atleast_2d(rows)
    mc = _MultisetCompressor(serialize_rows(rows), compressor)
    current = tuple(range(len(rows)))
    best = mc.ncd1(current)
    while len(current) > 2:
        children = [current[:p] + current[p + 1 :] for p in range(len(current))]
        scores = [mc.ncd1(c) for c in children]
        j = int(np.argmax(scores))
        best = max(best, scores[j])
        current = children[j]
    return best


def ncd(suite, compressor: Compressor = bz2_length, exact_limit: int = 12) -> DiversityValue:
    rows = _features(suite)
    if len(rows) <= exact_limit:
        return DiversityValue("ncd", ncd_exact(rows, compressor))
    return DiversityValue("ncd", ncd_greedy(rows, compressor), approximate=True)


def compute(metric: str, suite, bins: int = 10, exact_limit: int = 12, compressor: Compressor = bz2_length):
    if metric == "shannon":
        return shannon_evenness(suite, bins)
    if metric == "euclidean":
        return euclidean_diversity(suite)
    if metric == "ncd":
        return ncd(suite, compressor, exact_limit)
    if metric == "std":
        return std_metric(suite)
    raise ValueError(f"unknown metric {metric!r}; valid: {', '.join(METRICS)}")
