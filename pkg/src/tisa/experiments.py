"""Sampling, correlation and timing studies over test-suite samples."""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
import os
import statistics
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import baselines
from .config import Config
from .dataset import TestSuite
from .pipeline import TISA_METRICS, build_instance_space

log = logging.getLogger(__name__)

ALL_METRICS = (*TISA_METRICS, *baselines.METRICS)
SIGNIFICANCE = 0.05


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    sample_size: int = 2500
    n_samples: int = 30
    bug_fraction_start: float = 5
    bug_fraction_stop: float = 75
    bug_fraction_step: float = 5
    seed: int = 0

    def __post_init__(self):
        if self.sample_size < 1:
            raise PlanError("sample_size must be >= 1")
        if self.n_samples < 1:
            raise PlanError("n_samples must be >= 1")
        if not 0 < self.bug_fraction_start <= self.bug_fraction_stop <= 100:
            raise PlanError("need 0 < start <= stop <= 100 for bug fractions")
        if not self.bug_fraction_step > 0:
            raise PlanError("bug fraction step must be > 0")

    @classmethod
    def from_config(cls, config: Config) -> "ExperimentPlan":
        return cls(config.sample_size, config.n_samples, config.bug_start, config.bug_stop, config.bug_step, config.seed)

    def fractions(self) -> list[float]:
        """Bug percentages per sample: sweep start..stop by step, then wrap."""
        sweep = []
        n = self.bug_fraction_start
        while n <= self.bug_fraction_stop + 1e-9:
            sweep.append(n)
            n += self.bug_fraction_step
        return [sweep[i % len(sweep)] for i in range(self.n_samples)]


def buggy_count(percent: float, size: int) -> int:
    """``round(percent * size / 100)`` with halves rounded up."""
    return int(math.floor(percent * size / 100.0 + 0.5))


@dataclass(frozen=True)
class Sample:
    index: int
    bug_percent: float
    suite: TestSuite


def stratified_samples(suite: TestSuite, plan: ExperimentPlan) -> list[Sample]:
    """Draw each sample as n% failing plus (100 - n)% safe scenarios,
    without replacement within a sample and independently across samples."""
    failed = np.flatnonzero(suite.outcomes == 1)
    safe = np.flatnonzero(suite.outcomes == 0)
    fractions = plan.fractions()
    for n in sorted(set(fractions)):
        n_bug = buggy_count(n, plan.sample_size)
        n_safe = plan.sample_size - n_bug
        if n_bug > len(failed) or n_safe > len(safe):
            raise PlanError(
                f"bug fraction {n:g}% needs {n_bug} failing and {n_safe} safe scenarios; "
                f"suite has {len(failed)} and {len(safe)}"
            )
    seeds = np.random.SeedSequence(plan.seed).spawn(len(fractions))
    samples = []
    for i, (n, ss) in enumerate(zip(fractions, seeds)):
        rng = np.random.default_rng(ss)
        n_bug = buggy_count(n, plan.sample_size)
        rows = np.concatenate(
            [rng.choice(failed, n_bug, replace=False), rng.choice(safe, plan.sample_size - n_bug, replace=False)]
        )
        samples.append(Sample(i, n, suite.subset(np.sort(rows))))
    return samples


@dataclass(frozen=True)
class CorrelationResult:
    rho: Optional[float]
    p_value: Optional[float]
    n: int

    @property
    def defined(self) -> bool:
        return self.rho is not None

    @property
    def significant(self) -> bool:
        return self.p_value is not None and self.p_value <= SIGNIFICANCE

    def to_json(self) -> dict:
        return {
            "rho": self.rho if self.defined else "undefined",
            "p_value": self.p_value if self.defined else "undefined",
            "n": self.n,
            "significant": self.significant,
        }


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Spearman's rho with average ranks for ties and a two-sided
    t-approximation p-value. A constant input yields an undefined result."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 3:
        raise ValueError("spearman needs at least 3 pairs")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        return CorrelationResult(None, None, n)
    # symmetric in x and y: the product is commutative and sqrt(a*b) == sqrt(b*a)
    rho = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return CorrelationResult(rho, min(1.0, p), n)


def _compute_sample_metrics(suite: TestSuite, metrics: Sequence[str], config: Config):
    """Metric values (None when a metric fails) and seconds per metric group."""
    values: dict[str, Optional[float]] = {}
    seconds: dict[str, float] = {}
    errors: dict[str, str] = {}
    tisa = [m for m in metrics if m in TISA_METRICS]
    if tisa:
        t0 = time.perf_counter()
        try:
            space = build_instance_space(suite, config)
            got = space.metrics()
            for m in tisa:
                values[m] = got[m]
                if got[m] is None:
                    errors[m] = space.hull_error or "unavailable"
        except Exception as exc:  # recorded as missing, not fatal
            for m in tisa:
                values[m] = None
                errors[m] = str(exc)
        seconds["tisa"] = time.perf_counter() - t0
    for m in metrics:
        if m in TISA_METRICS:
            continue
        t0 = time.perf_counter()
        try:
            values[m] = baselines.compute(
                m, suite, bins=config.shannon_bins, exact_limit=config.ncd_exact_limit
            ).value
        except Exception as exc:
            values[m] = None
            errors[m] = str(exc)
        seconds[m] = time.perf_counter() - t0
    return values, seconds, errors


def _sample_job(args):
    sample, metrics, config = args
    values, seconds, errors = _compute_sample_metrics(sample.suite, metrics, config)
    return sample.index, values, seconds, errors


def _correlate(xs, ys) -> CorrelationResult:
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if len(pairs) < 3:
        return CorrelationResult(None, None, len(pairs))
    a, b = zip(*pairs)
    return spearman(a, b)


@dataclass
class StudyReport:
    plan: ExperimentPlan
    metrics: list[str]
    bug_counts: list[int]
    bug_percents: list[float]
    values: dict[str, list[Optional[float]]]
    errors: dict[str, dict[int, str]]
    rq1: dict[str, CorrelationResult]
    rq2: dict[str, CorrelationResult]
    seconds: dict[str, list[float]] = field(default_factory=dict)

    def to_json(self, include_timings: bool = False) -> dict:
        doc = {
            "plan": asdict(self.plan),
            "metrics": self.metrics,
            "samples": [
                {"index": i, "bug_percent": p, "bug_count": c, **{m: self.values[m][i] for m in self.metrics}}
                for i, (p, c) in enumerate(zip(self.bug_percents, self.bug_counts))
            ],
            "errors": {m: {str(k): v for k, v in e.items()} for m, e in self.errors.items() if e},
            "rq1": {m: r.to_json() for m, r in self.rq1.items()},
            "rq2": {m: r.to_json() for m, r in self.rq2.items()},
        }
        if include_timings:
            doc["seconds"] = self.seconds
        return doc

    def correlation_rows(self) -> list[dict]:
        rows = []
        for question, table, against in (("rq1", self.rq1, "bug_count"), ("rq2", self.rq2, "area_bugs")):
            for m, r in table.items():
                secs = self.seconds.get("tisa" if m in TISA_METRICS else m, [])
                rows.append(
                    {
                        "question": question,
                        "metric": m,
                        "against": against,
                        "rho": "undefined" if r.rho is None else f"{r.rho:.6f}",
                        "p_value": "undefined" if r.p_value is None else f"{r.p_value:.6g}",
                        "significant": r.significant,
                        "n": r.n,
                        "median_seconds": f"{statistics.median(secs):.4f}" if secs else "",
                    }
                )
        return rows


def run_correlation_study(
    suite: TestSuite,
    plan: ExperimentPlan,
    metrics: Sequence[str] = ("area_is", "area_bugs", "cov_is", "euclidean", "shannon", "std"),
    config: Config | None = None,
    jobs: int = 1,
) -> StudyReport:
    """Metrics per stratified sample, then Spearman of each metric against
    the bug count (rq1) and of area_bugs against each baseline (rq2)."""
    config = config or Config()
    metrics = list(metrics)
    unknown = [m for m in metrics if m not in ALL_METRICS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; valid: {', '.join(ALL_METRICS)}")
    samples = stratified_samples(suite, plan)
    tasks = [(s, metrics, config) for s in samples]
    if jobs > 1:
        with ProcessPoolExecutor(jobs, mp_context=mp.get_context("spawn")) as pool:
            results = list(pool.map(_sample_job, tasks))
    else:
        results = [_sample_job(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    values = {m: [r[1][m] for r in results] for m in metrics}
    errors = {m: {r[0]: r[3][m] for r in results if m in r[3]} for m in metrics}
    seconds: dict[str, list[float]] = {}
    for r in results:
        for k, v in r[2].items():
            seconds.setdefault(k, []).append(v)
    bug_counts = [s.suite.n_bugs for s in samples]
    rq1 = {m: _correlate(values[m], bug_counts) for m in metrics}
    rq2 = {}
    if "area_bugs" in metrics:
        rq2 = {m: _correlate(values["area_bugs"], values[m]) for m in metrics if m in baselines.METRICS}
    return StudyReport(plan, metrics, bug_counts, [s.bug_percent for s in samples], values, errors, rq1, rq2, seconds)


def tisa_run(suite: TestSuite, config: Config, plot_dir: str | None = None) -> dict:
    """Instance space, metrics and all plots: the unit timed for TISA."""
    from .plots import write_instance_space_plots

    space = build_instance_space(suite, config)
    if plot_dir is None:
        with tempfile.TemporaryDirectory() as tmp:
            write_instance_space_plots(space, tmp)
    else:
        write_instance_space_plots(space, plot_dir)
    return space.metrics()


def _timed(metric: str, suite: TestSuite, config: Config) -> float:
    t0 = time.perf_counter()
    if metric == "tisa" or metric in TISA_METRICS:
        tisa_run(suite, config)
    else:
        baselines.compute(metric, suite, bins=config.shannon_bins, exact_limit=config.ncd_exact_limit)
    return time.perf_counter() - t0


def _timed_child(conn, metric, suite, config):
    try:
        conn.send(("ok", _timed(metric, suite, config)))
    except Exception as exc:  # pragma: no cover - reported to parent
        conn.send(("error", str(exc)))
    finally:
        conn.close()


def _time_with_timeout(metric: str, suite: TestSuite, config: Config, timeout: float | None):
    """Seconds for one run, or ``("timeout"|"error", detail)``."""
    if not timeout:
        try:
            return _timed(metric, suite, config)
        except Exception as exc:
            return ("error", str(exc))
    ctx = mp.get_context("fork") if os.name == "posix" else mp.get_context("spawn")
    parent, child = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_timed_child, args=(child, metric, suite, config))
    proc.start()
    child.close()
    if parent.poll(timeout):
        status, payload = parent.recv()
        proc.join()
        return payload if status == "ok" else ("error", payload)
    proc.terminate()
    proc.join()
    return ("timeout", f"exceeded {timeout:g} s")


@dataclass(frozen=True)
class TimingCell:
    size: int
    metric: str
    median_seconds: Optional[float]
    runs: tuple[float, ...]
    status: str = "ok"
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "metric": self.metric,
            "median_seconds": self.median_seconds,
            "runs": list(self.runs),
            "status": self.status,
            "detail": self.detail,
        }


def timing_subset(suite: TestSuite, size: int, seed: int, augment: bool = False) -> TestSuite:
    rng = np.random.default_rng([seed, size])
    if size <= suite.n_scenarios:
        rows = np.sort(rng.choice(suite.n_scenarios, size, replace=False))
        return suite.subset(rows)
    if not augment:
        raise PlanError(f"size {size} exceeds the suite's {suite.n_scenarios} scenarios (enable augmentation)")
    rows = rng.choice(suite.n_scenarios, size, replace=True)
    return TestSuite(
        scenario_ids=tuple(f"aug{i:06d}" for i in range(size)),
        features=suite.features[rows],
        outcomes=suite.outcomes[rows],
        feature_names=suite.feature_names,
    )


def run_timing_study(
    suite: TestSuite,
    sizes: Sequence[int],
    metrics: Sequence[str] = ("tisa", "euclidean", "shannon", "std"),
    seed: int = 0,
    config: Config | None = None,
    repeats: int = 3,
    timeout: float | None = 600.0,
    augment: bool = False,
) -> list[TimingCell]:
    """Median wall-clock per size and metric. Cells run serially.

    ``"tisa"`` (or any TISA metric name) times instance-space generation,
    all three metrics and plot output together. A run that times out or
    fails ends its cell early with that status.
    """
    config = config or Config()
    cells = []
    for size in sizes:
        sub = timing_subset(suite, size, seed, augment)
        for metric in metrics:
            runs: list[float] = []
            status, detail = "ok", ""
            for _ in range(repeats):
                got = _time_with_timeout(metric, sub, config, timeout)
                if isinstance(got, tuple):
                    status, detail = got
                    break
                runs.append(got)
            med = statistics.median(runs) if runs and status == "ok" else None
            cells.append(TimingCell(size, metric, med, tuple(runs), status, detail))
            log.info("timing size=%d metric=%s median=%s status=%s", size, metric, med, status)
    return cells
