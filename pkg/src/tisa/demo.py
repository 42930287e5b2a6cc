"""Seeded synthetic driving-scenario suite for docs, smoke tests and benchmarks.

Two latent factors drive failure probability. Each is observed through a
signal feature and, when there is room, a correlated partner; the remaining
columns are independent nuisance features.
"""

from __future__ import annotations

import numpy as np

from .dataset import TestSuite

_NUISANCE = ["lane_width", "traffic_density", "rain", "fog", "time_of_day", "road_grade", "friction", "light"]


def make_demo_suite(n_scenarios: int = 2000, n_features: int = 6, seed: int = 0, sharpness: float = 8.0) -> TestSuite:
    if n_features < 2:
        raise ValueError("the demo suite needs at least 2 features")
    if n_features - 4 > len(_NUISANCE):
        raise ValueError(f"at most {4 + len(_NUISANCE)} features are supported")
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, size=(n_scenarios, 2))
    cols: dict[str, np.ndarray] = {
        "speed": 10.0 + 20.0 * u[:, 0] + rng.normal(0, 0.5, n_scenarios),
        "turn_angle": 90.0 * u[:, 1] + rng.normal(0, 2.0, n_scenarios),
    }
    if n_features >= 4:
        cols["throttle"] = 0.2 + 0.7 * u[:, 0] + rng.normal(0, 0.06, n_scenarios)
        cols["steering"] = 0.5 * u[:, 1] + rng.normal(0, 0.04, n_scenarios)
    extra = n_features - len(cols)
    for name in _NUISANCE[:extra]:
        cols[name] = rng.uniform(0.0, 1.0, n_scenarios)
    order = ["speed", "throttle", "turn_angle", "steering", *_NUISANCE]
    names = [c for c in order if c in cols]

    p_fail = 1.0 / (1.0 + np.exp(-sharpness * (u[:, 0] + u[:, 1] - 1.05)))
    outcomes = (rng.uniform(size=n_scenarios) < p_fail).astype(int)
    return TestSuite(
        scenario_ids=tuple(f"s{i:05d}" for i in range(n_scenarios)),
        features=np.column_stack([cols[c] for c in names]),
        outcomes=outcomes,
        feature_names=tuple(names),
    )
