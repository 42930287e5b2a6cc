import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tisa.dataset import TestSuite
from tisa.demo import make_demo_suite

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Append a one-line verdict to the acceptance summary printed at the end of the run."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def small_demo() -> TestSuite:
    return make_demo_suite(600, n_features=4, seed=3)


def suite_from(features, outcomes, names=None) -> TestSuite:
    features = np.asarray(features, dtype=float)
    n, m = features.shape
    return TestSuite(
        scenario_ids=tuple(f"s{i}" for i in range(n)),
        features=features,
        outcomes=np.asarray(outcomes, dtype=int),
        feature_names=tuple(names or (f"f{j}" for j in range(m))),
    )
