"""Command-line front end.

Exit codes: 0 success, 2 data or stage error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__, baselines
from .config import Config
from .dataset import SuiteError, TestSuite, load_suite, write_suite
from .experiments import ALL_METRICS, ExperimentPlan, PlanError, run_correlation_study, run_timing_study, stratified_samples
from .pipeline import TISA_METRICS, StageError, baseline_values, build_instance_space
from .plots import write_instance_space_plots

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 2, 64
DEMO_SUITE = Path(__file__).parent / "data" / "demo_suite.csv"

log = logging.getLogger("tisa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: usage error: {message}\n")


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--config", type=Path, help="JSON or TOML config file")
    p.add_argument("--out-dir", type=Path, default=Path("tisa-out"), help="output directory (default ./tisa-out)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="machine-readable output format")
    p.add_argument("--outcome-column", help="outcome column name (default 'failed')")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _suite_arg(p):
    p.add_argument("suite", type=Path, help="suite CSV (use 'demo' for the bundled synthetic suite)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tisa", description="Instance-space adequacy metrics for black-box test suites.")
    parser.add_argument("--version", action="version", version=f"tisa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("analyze", parents=[common], help="full instance-space analysis with report and plots")
    _suite_arg(p)
    p.add_argument("--baselines", type=_csv_names, default=list(b for b in baselines.METRICS if b != "ncd"))

    p = sub.add_parser("metrics", parents=[common], help="compute selected metrics")
    _suite_arg(p)
    p.add_argument("--metric", type=_csv_names, required=True, help=f"comma list from: {', '.join(ALL_METRICS)}")
    p.add_argument("--json-out", type=Path, help="also write values as JSON here")

    p = sub.add_parser("sample", parents=[common], help="write stratified bug-ratio samples")
    _suite_arg(p)
    _plan_args(p)

    p = sub.add_parser("experiment", parents=[common], help="correlation (rq1/rq2) or timing (rq3) study")
    _suite_arg(p)
    p.add_argument("--question", choices=("rq1", "rq2", "rq3"), required=True)
    _plan_args(p)
    p.add_argument("--metrics", type=_csv_names)
    p.add_argument("--sizes", type=_csv_ints)
    p.add_argument("--jobs", type=int)
    p.add_argument("--augment", action="store_true", help="resample with replacement when a size exceeds the suite")

    p = sub.add_parser("bench", parents=[common], help="timing study (same as experiment --question rq3)")
    _suite_arg(p)
    p.add_argument("--sizes", type=_csv_ints)
    p.add_argument("--metrics", type=_csv_names)
    p.add_argument("--augment", action="store_true")

    p = sub.add_parser("plot", parents=[common], help="instance-space SVG plots only")
    _suite_arg(p)

    p = sub.add_parser("demo", parents=[common], help="write a synthetic demo suite CSV")
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--features", type=int, default=4)
    p.add_argument("--output", type=Path, default=Path("demo_suite.csv"))
    return parser


def _plan_args(p):
    p.add_argument("--sample-size", type=int)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--bug-start", type=float)
    p.add_argument("--bug-stop", type=float)
    p.add_argument("--bug-step", type=float)


def _parse_set(items: Sequence[str]) -> dict[str, Any]:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            out[key.strip()] = value
    return out


def resolve_config(args) -> Config:
    overrides: dict[str, Any] = _parse_set(args.set)
    for name in ("seed", "outcome_column", "sample_size", "n_samples", "bug_start", "bug_stop", "bug_step", "jobs"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    for name in ("sizes", "metrics"):
        value = getattr(args, name, None)
        if value:
            overrides[name] = value
    try:
        return Config.load(args.config, overrides)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc


def _load(args, config: Config) -> TestSuite:
    path = DEMO_SUITE if str(args.suite) == "demo" else args.suite
    try:
        return load_suite(path, config.outcome_column, config.id_column)
    except FileNotFoundError as exc:
        raise StageError("ingest", exc) from exc
    except SuiteError as exc:
        raise StageError("ingest", exc) from exc


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def suite_descriptor(args, suite: TestSuite) -> dict:
    return {
        "path": str(args.suite),
        "scenarios": suite.n_scenarios,
        "features": suite.n_features,
        "feature_names": list(suite.feature_names),
        "bugs": suite.n_bugs,
    }


def analysis_report(args, suite: TestSuite, config: Config, space, base: dict) -> dict:
    hull = space.hull
    return {
        "tool": {"name": "tisa", "version": __version__},
        "seed": config.seed,
        "config": config.to_json(),
        "suite": suite_descriptor(args, suite),
        "selected_features": space.selected_names,
        "feature_clustering": None
        if space.selection.clustering is None
        else dataclasses.asdict(space.selection.clustering),
        "combination_scores": [
            {"features": [suite.feature_names[i] for i in s.feature_set], "cv_error": s.cv_error}
            for s in space.selection.scores
        ],
        "tisa": {"area_is": space.area_is, "area_bugs": space.area_bugs, "cov_is": space.cov_is},
        "diagnostics": {
            "inside_hull_fraction": space.inside_hull_fraction,
            "raw_bug_footprint_area": space.bugs.raw.area,
            "safe_footprint_area": space.bugs.safe.area,
            "kept_overlaps": space.bugs.kept_overlaps,
            "removed_overlaps": space.bugs.removed_overlaps,
            "pilot_objective": space.model.objective,
        },
        "boundary": hull.to_json() if hull is not None else None,
        "baselines": {k: v.to_json() for k, v in base.items()},
        "projection": {k: v for k, v in space.model.to_json().items() if k != "Z"},
    }


def cmd_analyze(args, config: Config) -> int:
    suite = _load(args, config)
    space = build_instance_space(suite, config)
    if space.hull is None:
        raise StageError("boundary", ValueError(space.hull_error))
    base = baseline_values(suite, args.baselines, config)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    report = analysis_report(args, suite, config, space, base)
    _write_json(out / "report.json", report)
    _write_json(out / "model.json", space.model.to_json())
    try:
        paths = write_instance_space_plots(space, out)
    except OSError as exc:
        raise StageError("plot", exc) from exc
    print(f"area_is: {space.area_is:.6g}")
    print(f"area_bugs: {space.area_bugs:.6g}")
    print(f"cov_is: {space.cov_is:.6g}")
    print(f"report: {out / 'report.json'}")
    for p in paths:
        print(f"plot: {p}")
    return EXIT_OK


def cmd_metrics(args, config: Config) -> int:
    unknown = [m for m in args.metric if m not in ALL_METRICS]
    if unknown or not args.metric:
        raise UsageError(f"unknown metric(s) {', '.join(unknown) or '(none)'}; valid names: {', '.join(ALL_METRICS)}")
    suite = _load(args, config)
    values: dict[str, float | None] = {}
    tisa = [m for m in args.metric if m in TISA_METRICS]
    if tisa:
        got = build_instance_space(suite, config).metrics()
        values.update({m: got[m] for m in tisa})
    base = baseline_values(suite, [m for m in args.metric if m not in TISA_METRICS], config)
    values.update({m: v.value for m, v in base.items()})
    ordered = {m: values[m] for m in args.metric}
    if args.format == "csv":
        print("metric,value")
        for m, v in ordered.items():
            print(f"{m},{'' if v is None else repr(float(v))}")
    else:
        for m, v in ordered.items():
            print(f"{m}: {'unavailable' if v is None else format(v, '.10g')}")
    if args.json_out:
        _write_json(args.json_out, ordered)
    return EXIT_OK


def _plan(config: Config) -> ExperimentPlan:
    try:
        return ExperimentPlan.from_config(config)
    except PlanError as exc:
        raise UsageError(str(exc)) from exc


def cmd_sample(args, config: Config) -> int:
    plan = _plan(config)
    suite = _load(args, config)
    try:
        samples = stratified_samples(suite, plan)
    except PlanError as exc:
        raise StageError("sample", exc) from exc
    out = args.out_dir / "samples"
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for s in samples:
        path = out / f"sample_{s.index:03d}.csv"
        write_suite(s.suite, path, config.outcome_column)
        manifest.append({"index": s.index, "bug_percent": s.bug_percent, "bugs": s.suite.n_bugs, "file": path.name})
    if args.format == "csv":
        _write_csv(out / "manifest.csv", manifest)
    else:
        _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(samples)} samples to {out}")
    return EXIT_OK


def _timing(args, config: Config, suite: TestSuite) -> int:
    metrics = args.metrics or ["tisa", "euclidean", "shannon", "std"]
    valid = ("tisa", *ALL_METRICS)
    bad = [m for m in metrics if m not in valid]
    if bad:
        raise UsageError(f"unknown metric(s) {', '.join(bad)}; valid names: {', '.join(valid)}")
    sizes = args.sizes if args.sizes is not None else config.sizes
    try:
        cells = run_timing_study(
            suite,
            sizes,
            metrics,
            seed=config.seed,
            config=config,
            repeats=config.timing_repeats,
            timeout=config.cell_timeout,
            augment=args.augment,
        )
    except PlanError as exc:
        raise StageError("timing", exc) from exc
    rows = [
        {
            "size": c.size,
            "metric": c.metric,
            "median_seconds": "" if c.median_seconds is None else f"{c.median_seconds:.6f}",
            "status": c.status,
        }
        for c in cells
    ]
    _write_csv(args.out_dir / "timings.csv", rows)
    if args.format == "json":
        _write_json(args.out_dir / "timings.json", [c.to_json() for c in cells])
    for r in rows:
        print(f"{r['size']:>7} {r['metric']:<10} {r['median_seconds'] or r['status']}")
    return EXIT_OK


def cmd_experiment(args, config: Config) -> int:
    if args.question == "rq3":
        return _timing(args, config, _load(args, config))
    plan = _plan(config)
    metrics = list(config.metrics)
    bad = [m for m in metrics if m not in ALL_METRICS]
    if bad:
        raise UsageError(f"unknown metric(s) {', '.join(bad)}; valid names: {', '.join(ALL_METRICS)}")
    if args.question == "rq2" and "area_bugs" not in metrics:
        metrics.insert(0, "area_bugs")
    suite = _load(args, config)
    try:
        study = run_correlation_study(suite, plan, metrics, config, jobs=config.jobs)
    except PlanError as exc:
        raise StageError("sample", exc) from exc
    rows = [r for r in study.correlation_rows() if r["question"] == args.question]
    _write_csv(args.out_dir / "correlations.csv", rows)
    _write_json(
        args.out_dir / "report.json",
        {
            "tool": {"name": "tisa", "version": __version__},
            "seed": config.seed,
            "config": config.to_json(),
            "suite": suite_descriptor(args, suite),
            "question": args.question,
            "study": study.to_json(),
        },
    )
    timing_rows = [
        {"metric": k, "median_seconds": f"{sorted(v)[len(v) // 2]:.6f}", "runs": len(v)} for k, v in study.seconds.items()
    ]
    _write_csv(args.out_dir / "timings.csv", timing_rows)
    for r in rows:
        flag = "*" if r["significant"] else " "
        print(f"{r['question']} {r['metric']:<10} vs {r['against']:<9} rho={r['rho']:>10} p={r['p_value']:>10} {flag}")
    return EXIT_OK


def cmd_bench(args, config: Config) -> int:
    return _timing(args, config, _load(args, config))


def cmd_plot(args, config: Config) -> int:
    suite = _load(args, config)
    space = build_instance_space(suite, config)
    try:
        paths = write_instance_space_plots(space, args.out_dir)
    except OSError as exc:
        raise StageError("plot", exc) from exc
    for p in paths:
        print(f"plot: {p}")
    return EXIT_OK


def cmd_demo(args, config: Config) -> int:
    from .demo import make_demo_suite

    try:
        suite = make_demo_suite(args.rows, args.features, seed=config.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_suite(suite, args.output, config.outcome_column)
    print(f"wrote {suite.n_scenarios} scenarios ({suite.n_bugs} failing) to {args.output}")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "metrics": cmd_metrics,
    "sample": cmd_sample,
    "experiment": cmd_experiment,
    "bench": cmd_bench,
    "plot": cmd_plot,
    "demo": cmd_demo,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        print("resolved config: " + json.dumps(config.to_json(), sort_keys=True), file=sys.stderr)
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"tisa {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"tisa {args.command}: error {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SuiteError, ValueError) as exc:
        print(f"tisa {args.command}: error [data] {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
