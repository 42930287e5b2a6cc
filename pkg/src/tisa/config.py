"""Run configuration: built-in defaults < config file < CLI flags."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    tomllib = None


@dataclass
class Config:
    seed: int = 0
    outcome_column: str = "failed"
    id_column: str = "id"
    # feature selection
    k_candidates: Optional[list[int]] = None
    rf_trees: int = 100
    cv_folds: int = 5
    combo_cap: int = 10_000
    selection_max_rows: int = 500
    # projection
    pilot_restarts: int = 5
    pilot_max_iter: int = 1000
    pilot_tol: float = 1e-6
    # footprints / boundary
    eps_formula: str = "product"
    boundary_corr_threshold: float = 0.7
    bounds_lower: Optional[list[float]] = None
    bounds_upper: Optional[list[float]] = None
    # baselines
    shannon_bins: int = 10
    ncd_exact_limit: int = 12
    # experiments
    sample_size: int = 2500
    n_samples: int = 30
    bug_start: float = 5
    bug_stop: float = 75
    bug_step: float = 5
    metrics: list[str] = field(default_factory=lambda: ["area_is", "area_bugs", "cov_is", "euclidean", "shannon", "std"])
    sizes: list[int] = field(default_factory=lambda: [500, 1000, 1500, 2000, 2500, 3000, 5000, 10000])
    timing_repeats: int = 3
    cell_timeout: float = 600.0
    jobs: int = 1

    @staticmethod
    def key(name: str) -> str:
        """Attribute name for a config key: ``k-candidates`` -> ``k_candidates``."""
        return name.replace("-", "_")

    def update(self, values: dict[str, Any]) -> "Config":
        known = {f.name for f in dataclasses.fields(self)}
        for raw_key, value in values.items():
            if value is None:
                continue
            key = self.key(raw_key)
            if key not in known:
                raise KeyError(f"unknown config key {raw_key!r}")
            setattr(self, key, value)
        self.validate()
        return self

    def validate(self) -> None:
        if self.eps_formula not in ("product", "dimension-root"):
            raise ValueError(f"eps-formula must be 'product' or 'dimension-root', got {self.eps_formula!r}")
        if not 0 < self.boundary_corr_threshold <= 1:
            raise ValueError("boundary-corr-threshold must lie in (0, 1]")
        if self.cv_folds < 2:
            raise ValueError("cv-folds must be >= 2")
        if self.rf_trees < 1 or self.combo_cap < 1 or self.pilot_restarts < 1:
            raise ValueError("rf-trees, combo-cap and pilot-restarts must be >= 1")
        if (self.bounds_lower is None) != (self.bounds_upper is None):
            raise ValueError("bounds-lower and bounds-upper must be given together")

    def to_json(self) -> dict[str, Any]:
        return {f.name.replace("_", "-"): getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> "Config":
        cfg = cls()
        if path is not None:
            cfg.update(read_config_file(path))
        if overrides:
            cfg.update(overrides)
        cfg.validate()
        return cfg


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        if tomllib is None:
            raise ValueError("TOML config files need Python 3.11+; use JSON instead")
        return tomllib.loads(text)
    return json.loads(text)
