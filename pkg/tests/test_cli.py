import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tisa.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from tisa.config import Config
from tisa.dataset import write_suite
from tisa.demo import make_demo_suite
from tisa.plots import emit_svg_scatter, render_scatter

from conftest import suite_from

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def suite_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("suite") / "demo.csv"
    write_suite(make_demo_suite(800, n_features=4, seed=2), path)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestMetricsCommand:
    def test_two_labeled_lines(self, suite_csv, capsys):
        code, out, err = run(["metrics", suite_csv, "--metric", "shannon,std"], capsys)
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert [ln.split(":")[0] for ln in lines] == ["shannon", "std"]
        assert err.startswith("resolved config: {")

    def test_constant_suite_std_is_zero(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        write_suite(suite_from(np.ones((6, 2)), [0, 1] * 3), p)
        code, out, _ = run(["metrics", p, "--metric", "std"], capsys)
        assert code == EXIT_OK and out.strip() == "std: 0"

    def test_unknown_metric(self, suite_csv, capsys):
        code, _, err = run(["metrics", suite_csv, "--metric", "bogus"], capsys)
        assert code == EXIT_USAGE
        assert "area_is" in err and "ncd" in err

    def test_csv_format_and_json_out(self, suite_csv, tmp_path, capsys):
        code, out, _ = run(
            ["metrics", suite_csv, "--metric", "euclidean", "--format", "csv", "--json-out", tmp_path / "m.json"], capsys
        )
        assert code == EXIT_OK and out.startswith("metric,value\neuclidean,")
        assert set(json.loads((tmp_path / "m.json").read_text())) == {"euclidean"}


class TestErrors:
    def test_single_class_suite_is_stage_error(self, tmp_path, capsys):
        p = tmp_path / "one.csv"
        write_suite(suite_from(np.random.default_rng(0).normal(size=(20, 3)), [0] * 20), p)
        code, _, err = run(["analyze", p, "--out-dir", tmp_path / "o"], capsys)
        assert code == EXIT_DATA and "[ingest]" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["metrics", tmp_path / "none.csv", "--metric", "std"], capsys)
        assert code == EXIT_DATA and "[ingest]" in err

    def test_bad_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analyze"])
        assert exc.value.code == EXIT_USAGE

    def test_invalid_plan(self, suite_csv, tmp_path, capsys):
        code, _, err = run(
            ["experiment", suite_csv, "--question", "rq1", "--bug-start", 50, "--bug-stop", 40, "--out-dir", tmp_path],
            capsys,
        )
        assert code == EXIT_USAGE and "start" in err

    def test_unknown_config_key(self, suite_csv, capsys):
        code, _, err = run(["metrics", suite_csv, "--metric", "std", "--set", "colour=red"], capsys)
        assert code == EXIT_USAGE and "colour" in err

    def test_exit_code_from_subprocess(self, suite_csv):
        proc = subprocess.run(
            [sys.executable, "-m", "tisa", "metrics", str(suite_csv), "--metric", "nope"], capture_output=True, text=True
        )
        assert proc.returncode == EXIT_USAGE


class TestExperimentCommand:
    def test_rq1_one_row_per_metric(self, suite_csv, tmp_path, capsys):
        out_dir = tmp_path / "rq1"
        code, _, _ = run(
            ["experiment", suite_csv, "--question", "rq1", "--sample-size", 150, "--n-samples", 4, "--out-dir", out_dir,
             "--set", "rf-trees=10"],
            capsys,
        )
        assert code == EXIT_OK
        rows = list(csv.DictReader((out_dir / "correlations.csv").open()))
        assert [r["metric"] for r in rows] == Config().metrics
        assert all(r["question"] == "rq1" and r["against"] == "bug_count" for r in rows)
        report = json.loads((out_dir / "report.json").read_text())
        assert report["seed"] == 0 and len(report["study"]["samples"]) == 4
        assert (out_dir / "timings.csv").exists()

    def test_rq3_sizes(self, suite_csv, tmp_path, capsys):
        code, out, _ = run(
            ["experiment", suite_csv, "--question", "rq3", "--sizes", "500,1000", "--metrics", "std,euclidean",
             "--augment", "--out-dir", tmp_path],
            capsys,
        )
        assert code == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "timings.csv").open()))
        for metric in ("std", "euclidean"):
            assert [int(r["size"]) for r in rows if r["metric"] == metric] == [500, 1000]

    def test_bench_alias(self, suite_csv, tmp_path, capsys):
        code, _, _ = run(["bench", suite_csv, "--sizes", "300", "--metrics", "shannon", "--out-dir", tmp_path], capsys)
        assert code == EXIT_OK and (tmp_path / "timings.csv").exists()


class TestOtherCommands:
    def test_sample_writes_files(self, suite_csv, tmp_path, capsys):
        code, _, _ = run(["sample", suite_csv, "--sample-size", 100, "--n-samples", 3, "--out-dir", tmp_path], capsys)
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "samples" / "manifest.json").read_text())
        assert [m["bugs"] for m in manifest] == [5, 10, 15]

    def test_demo_command(self, tmp_path, capsys):
        code, out, _ = run(["demo", "--rows", 50, "--output", tmp_path / "d.csv"], capsys)
        assert code == EXIT_OK and (tmp_path / "d.csv").read_text().startswith("id,speed,throttle")

    def test_config_file_then_flag_precedence(self, suite_csv, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 5, "shannon-bins": 4}))
        _, _, err = run(["metrics", suite_csv, "--metric", "std", "--config", cfg, "--seed", 9], capsys)
        resolved = json.loads(err.split("resolved config: ", 1)[1].splitlines()[0])
        assert resolved["seed"] == 9 and resolved["shannon-bins"] == 4


class TestConfig:
    def test_defaults_are_explicit(self):
        doc = Config().to_json()
        assert doc["rf-trees"] == 100 and doc["cv-folds"] == 5 and doc["boundary-corr-threshold"] == 0.7

    def test_validation(self):
        with pytest.raises(ValueError):
            Config.load(overrides={"eps-formula": "other"})
        with pytest.raises(KeyError):
            Config().update({"nonsense": 1})


class TestSvg:
    def test_two_points_outcome(self):
        root = ET.fromstring(render_scatter([[0, 0], [1, 1]], [0, 1]))
        assert len(root.findall(f"{SVG}circle")) == 2
        legend = root.find(f"{SVG}g[@class='legend']")
        assert [t.text for t in legend.findall(f"{SVG}text")] == ["failed", "safe"]

    def test_hull_is_one_polygon(self):
        svg = render_scatter([[0, 0], [1, 1], [0, 1]], [0, 1, 1], hull=np.array([[0, 0], [1, 0], [1, 1]]))
        assert len(ET.fromstring(svg).findall(f"{SVG}polygon")) == 1

    def test_feature_ramp_labels(self):
        root = ET.fromstring(render_scatter([[0, 0], [1, 1], [2, 0]], [3.0, 5.0, 4.0], coloring="feature"))
        texts = [t.text for t in root.iter(f"{SVG}text")]
        assert "3" in texts and "5" in texts
        fills = [c.get("fill") for c in root.findall(f"{SVG}circle")]
        assert len(set(fills)) == 3

    def test_deterministic_bytes(self, tmp_path):
        pts = np.random.default_rng(0).normal(size=(30, 2))
        y = np.arange(30) % 2
        a = emit_svg_scatter(pts, y, tmp_path / "a.svg").read_bytes()
        b = emit_svg_scatter(pts, y, tmp_path / "b.svg").read_bytes()
        assert a == b

    def test_errors(self, tmp_path):
        with pytest.raises(ValueError):
            render_scatter(np.empty((0, 2)), [])
        with pytest.raises(OSError):
            emit_svg_scatter([[0, 0]], [1], tmp_path / "missing" / "x.svg")
