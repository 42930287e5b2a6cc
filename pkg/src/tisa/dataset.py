"""Test-suite ingestion plus the normalization and correlation primitives
shared by every downstream module."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

FAIL_LABELS = {"fail", "failed", "unsafe", "true", "bug", "buggy"}
PASS_LABELS = {"pass", "passed", "safe", "false", "ok"}


class SuiteError(ValueError):
    """Raised for malformed or unusable test-suite input."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TestSuite:
    """Scenario feature matrix with binary outcomes (1 = failure-revealing)."""

    __test__ = False  # keep pytest from collecting this class

    scenario_ids: tuple[str, ...]
    features: np.ndarray
    outcomes: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        outcomes = np.asarray(self.outcomes)
        if features.ndim != 2:
            raise SuiteError(f"features must be 2-D, got shape {features.shape}")
        n_rows, n_cols = features.shape
        if len(self.scenario_ids) != n_rows or outcomes.shape != (n_rows,):
            raise SuiteError(
                f"row count mismatch: {n_rows} feature rows, "
                f"{outcomes.shape[0] if outcomes.ndim else 0} outcomes, "
                f"{len(self.scenario_ids)} ids"
            )
        if len(self.feature_names) != n_cols:
            raise SuiteError(f"{n_cols} feature columns but {len(self.feature_names)} names")
        seen: set[str] = set()
        for sid in self.scenario_ids:
            if sid in seen:
                raise SuiteError(f"duplicate scenario id {sid!r}")
            seen.add(sid)
        if not np.all(np.isfinite(features)):
            r, c = np.argwhere(~np.isfinite(features))[0]
            raise SuiteError(f"non-finite feature value at row {r}, column {self.feature_names[c]!r}")
        if not np.all((outcomes == 0) | (outcomes == 1)):
            raise SuiteError("outcomes must be 0 or 1")
        object.__setattr__(self, "scenario_ids", tuple(str(s) for s in self.scenario_ids))
        object.__setattr__(self, "feature_names", tuple(str(s) for s in self.feature_names))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "outcomes", _frozen(outcomes.astype(np.int8)))

    @property
    def n_scenarios(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_bugs(self) -> int:
        return int(self.outcomes.sum())

    def subset(self, rows: Sequence[int] | np.ndarray) -> "TestSuite":
        rows = np.asarray(rows, dtype=int)
        return TestSuite(
            scenario_ids=tuple(self.scenario_ids[i] for i in rows),
            features=self.features[rows],
            outcomes=self.outcomes[rows],
            feature_names=self.feature_names,
        )

    def select(self, columns: Sequence[int]) -> "TestSuite":
        columns = list(columns)
        return TestSuite(
            scenario_ids=self.scenario_ids,
            features=self.features[:, columns],
            outcomes=self.outcomes,
            feature_names=tuple(self.feature_names[c] for c in columns),
        )


@dataclass(frozen=True)
class FeatureBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ValueError("lower and upper bounds differ in length")
        if np.any(lower > upper):
            bad = int(np.argmax(lower > upper))
            raise ValueError(f"lower bound exceeds upper bound for feature {bad}")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @classmethod
    def observed(cls, features: np.ndarray) -> "FeatureBounds":
        features = np.asarray(features, dtype=float)
        return cls(features.min(axis=0), features.max(axis=0))


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))

    def __getitem__(self, key):
        return self.values[key]


def _parse_outcome(cell: str, row: int, column: str) -> int:
    text = cell.strip()
    low = text.lower()
    if low in FAIL_LABELS:
        return 1
    if low in PASS_LABELS:
        return 0
    try:
        value = float(text)
    except ValueError:
        raise SuiteError(f"row {row}, column {column!r}: unrecognised outcome {cell!r}") from None
    if math.isnan(value):
        raise SuiteError(f"row {row}, column {column!r}: outcome is NaN")
    return int(value > 0)


def load_suite(path: str | Path, outcome_column: str = "failed", id_column: str = "id") -> TestSuite:
    """Read a suite from CSV laid out as ``id,<features...>,<outcome>``.

    Every column other than the id and the outcome is a numeric feature.
    When the header has no ``id_column``, scenarios are numbered by row.
    Row numbers in error messages are 1-based file lines (header = line 1).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SuiteError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if outcome_column not in header:
            raise SuiteError(f"{path}: missing outcome column {outcome_column!r} (header: {header})")
        out_idx = header.index(outcome_column)
        id_idx = header.index(id_column) if id_column in header else None
        feat_idx = [i for i in range(len(header)) if i not in (out_idx, id_idx)]

        ids: list[str] = []
        rows: list[list[float]] = []
        outcomes: list[int] = []
        first_seen: dict[str, int] = {}
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise SuiteError(f"{path}: line {lineno}: expected {len(header)} cells, got {len(record)}")
            sid = record[id_idx].strip() if id_idx is not None else str(len(ids))
            if sid in first_seen:
                raise SuiteError(
                    f"{path}: line {lineno}: duplicate scenario id {sid!r} (first seen on line {first_seen[sid]})"
                )
            first_seen[sid] = lineno
            values = []
            for i in feat_idx:
                try:
                    v = float(record[i])
                except ValueError:
                    raise SuiteError(
                        f"{path}: line {lineno}, column {header[i]!r}: non-numeric value {record[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise SuiteError(f"{path}: line {lineno}, column {header[i]!r}: non-finite value {record[i]!r}")
                values.append(v)
            ids.append(sid)
            rows.append(values)
            outcomes.append(_parse_outcome(record[out_idx], lineno, outcome_column))

    if not rows:
        raise SuiteError(f"{path}: no data rows")
    return TestSuite(
        scenario_ids=tuple(ids),
        features=np.array(rows, dtype=float).reshape(len(rows), len(feat_idx)),
        outcomes=np.array(outcomes),
        feature_names=tuple(header[i] for i in feat_idx),
    )


def write_suite(suite: TestSuite, path: str | Path, outcome_column: str = "failed") -> None:
    """Write ``suite`` as CSV; ``repr`` of each float keeps the round trip bit-exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *suite.feature_names, outcome_column])
        for sid, row, y in zip(suite.scenario_ids, suite.features, suite.outcomes):
            writer.writerow([sid, *(repr(float(v)) for v in row), int(y)])


def minmax_normalize(matrix) -> np.ndarray:
    """Rescale each column to [0, 1]; constant columns become all zeros."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise ValueError("cannot normalize an empty matrix")
    lo = m.min(axis=0)
    span = m.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = (m - lo) / safe
    out[:, span == 0] = 0.0
    return out


def pearson_correlation(matrix) -> CorrelationMatrix:
    """Column-pair Pearson coefficients; any pair with a constant column is 0."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("pearson_correlation needs at least 2 rows")
    centered = m - m.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    # relative test so columns with only rounding-level spread count as constant
    scale = np.maximum(np.abs(m).max(axis=0), 1.0)
    varying = norms > 1e-12 * scale * math.sqrt(m.shape[0])
    unit = np.zeros_like(centered)
    unit[:, varying] = centered[:, varying] / norms[varying]
    r = np.clip(unit.T @ unit, -1.0, 1.0)
    r = (r + r.T) / 2.0
    idx = np.flatnonzero(varying)
    r[idx, idx] = 1.0
    return CorrelationMatrix(r)


def standardize(matrix, mean=None, scale=None):
    """Z-score columns. Returns (standardized, mean, scale); zero spread maps to scale 1."""
    m = np.asarray(matrix, dtype=float)
    if mean is None:
        mean = m.mean(axis=0)
    if scale is None:
        scale = m.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    return (m - mean) / scale, np.asarray(mean, dtype=float), np.asarray(scale, dtype=float)
