"""End-to-end instance-space analysis of one suite."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import baselines
from .boundary import BoundaryHull, boundary_hull, coverage
from .config import Config
from .dataset import FeatureBounds, TestSuite, pearson_correlation
from .footprints import BugRegion, Footprint, bug_region, instance_footprint
from .pilot import ProjectionModel, fit_pilot
from .selection import SelectionResult, select_features

log = logging.getLogger(__name__)

TISA_METRICS = ("area_is", "area_bugs", "cov_is")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it for error reporting."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True, eq=False)
class InstanceSpace:
    suite: TestSuite
    selection: SelectionResult
    model: ProjectionModel
    coords: np.ndarray
    footprint: Footprint
    bugs: BugRegion
    hull: BoundaryHull | None
    hull_error: str | None

    @property
    def selected_names(self) -> list[str]:
        return [self.suite.feature_names[i] for i in self.selection.selected]

    @property
    def area_is(self) -> float:
        return self.footprint.area

    @property
    def area_bugs(self) -> float:
        return self.bugs.area

    @property
    def cov_is(self) -> float | None:
        return coverage(self.area_is, self.hull) if self.hull is not None else None

    @property
    def inside_hull_fraction(self) -> float | None:
        if self.hull is None:
            return None
        return float(self.hull.contains(self.coords).mean())

    def metrics(self) -> dict[str, float | None]:
        return {"area_is": self.area_is, "area_bugs": self.area_bugs, "cov_is": self.cov_is}


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _bounds(config: Config, suite: TestSuite, selected) -> FeatureBounds:
    if config.bounds_lower is None:
        return FeatureBounds.observed(suite.features[:, list(selected)])
    lower = np.asarray(config.bounds_lower, dtype=float)
    upper = np.asarray(config.bounds_upper, dtype=float)
    if len(lower) == suite.n_features:  # bounds given for every suite feature
        lower, upper = lower[list(selected)], upper[list(selected)]
    elif len(lower) != len(selected):
        raise ValueError(f"bounds cover {len(lower)} features; suite has {suite.n_features}, selected {len(selected)}")
    return FeatureBounds(lower, upper)


def build_instance_space(suite: TestSuite, config: Config | None = None) -> InstanceSpace:
    """Select features, fit the projection, and derive footprints and boundary."""
    config = config or Config()
    if suite.n_bugs == 0 or suite.n_bugs == suite.n_scenarios:
        raise StageError("ingest", ValueError("both failing and safe scenarios are required"))

    selection = _stage(
        "select",
        select_features,
        suite,
        k_candidates=config.k_candidates,
        trees=config.rf_trees,
        folds=config.cv_folds,
        cap=config.combo_cap,
        seed=config.seed,
        max_rows=config.selection_max_rows,
    )
    cols = list(selection.selected)
    raw = suite.features[:, cols]
    model = _stage(
        "project",
        fit_pilot,
        raw,
        suite.outcomes,
        restarts=config.pilot_restarts,
        seed=config.seed,
        max_iter=config.pilot_max_iter,
        tol=config.pilot_tol,
    )
    coords = model.Z
    fp = _stage("area_is", instance_footprint, coords, config.eps_formula)
    bugs = _stage("area_bugs", bug_region, coords, suite.outcomes, config.eps_formula)

    hull, hull_error = None, None
    try:
        bounds = _bounds(config, suite, cols)
        corr = pearson_correlation(raw)
        hull = boundary_hull(model, bounds, corr, config.boundary_corr_threshold)
    except ValueError as exc:
        hull_error = str(exc)
        log.warning("boundary unavailable: %s", exc)
    return InstanceSpace(suite, selection, model, coords, fp, bugs, hull, hull_error)


def baseline_values(suite: TestSuite, metrics, config: Config | None = None) -> dict[str, baselines.DiversityValue]:
    config = config or Config()
    return {
        m: _stage(m, baselines.compute, m, suite, bins=config.shannon_bins, exact_limit=config.ncd_exact_limit)
        for m in metrics
    }
