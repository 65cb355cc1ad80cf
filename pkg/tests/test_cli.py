import contextlib
import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from linebreak.cli import main
from linebreak.features import FEATURE_NAMES, read_features, write_features
from linebreak.synth import SynthConfig, generate

LEAGUE = ["--rounds", "2", "--matches-per-round", "3", "--passes-per-match", "300"]


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def ok(*argv):
    code, out, err = run(*argv)
    assert code == 0, err
    return out


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    data = d / "data"
    ok("synth", "--out", data, "--seed", 7, *LEAGUE)
    ok("label", "--data", data, "--out", d / "labels.csv")
    ok("featurize", "--data", data, "--labels", d / "labels.csv", "--out", d / "features.csv")
    ok("train", "--features", d / "features.csv", "--out", d / "model.json")
    return d


def test_pipeline_evaluates_by_round(pipeline):
    d = pipeline
    out = ok("evaluate", "--data", d / "data", "--features", d / "features.csv", "--out", d / "eval",
             "--folds", "by-round")
    report = json.loads((d / "eval" / "metrics.json").read_text())
    assert report["auc"] >= 0.9 and report["brier"] <= 0.05
    assert [f["round"] for f in report["folds"]] == [1, 2]
    assert out.startswith("AUC ")
    with open(d / "eval" / "predictions.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(read_features(d / "features.csv"))
    assert {r["round"] for r in rows} == {"1", "2"}


def test_scoring_a_given_model(pipeline):
    d = pipeline
    ok("evaluate", "--data", d / "data", "--features", d / "features.csv", "--out", d / "fit",
       "--model", d / "model.json")
    assert json.loads((d / "fit" / "metrics.json").read_text())["auc"] > 0.95


def test_strongest_planted_break_crosses_the_threshold(pipeline, tmp_path):
    # a fresh league; the pass the generator made most likely to break is the fixture
    fresh = generate(SynthConfig(seed=8, n_rounds=1, matches_per_round=3, passes_per_match=300))
    from linebreak.features import featurize_dataset
    from linebreak.labeler import label_dataset

    labels, _ = label_dataset(fresh.dataset)
    fm = featurize_dataset(labels, fresh.dataset)
    planted = [i for i, pid in enumerate(fm.pass_ids) if fresh.truth[pid]]
    best = max(planted, key=lambda i: (fresh.break_probability[fm.pass_ids[i]], fm.pass_ids[i]))
    write_features(fm.subset([best]), tmp_path / "one.csv")
    out = ok("predict", "--model", pipeline / "model.json", "--features", tmp_path / "one.csv")
    pid, p, cls = out.strip().split("\t")
    assert pid == fm.pass_ids[best] and float(p) >= 0.5 and cls == "1"


def test_explain_and_plots(pipeline):
    d = pipeline
    ok("explain", "--model", d / "model.json", "--features", d / "features.csv", "--out", d / "shap", "--top-k", 5)
    for name in ("attributions.csv", "shap_summary.csv", "shap_points.csv"):
        assert (d / "shap" / name).exists()
    ok("plot", "shap-summary", "--summary", d / "shap" / "shap_summary.csv", "--points", d / "shap" / "shap_points.csv",
       "--out", d / "shap.svg")
    ok("evaluate", "--data", d / "data", "--features", d / "features.csv", "--out", d / "tr",
       "--model", d / "model.json")
    out = ok("teamreport", "--data", d / "data", "--predictions", d / "tr" / "predictions.csv",
             "--out", d / "teams.csv", "--window", 2)
    assert "pearson r =" in out
    ok("plot", "scatter", "--team", d / "teams.csv", "--out", d / "teams.svg")
    from linebreak.ingest import load_dataset

    release = load_dataset(d / "data").passes["R1M1"][0].release_frame
    ok("plot", "pitch", "--data", d / "data", "--match", "R1M1", "--frame", release, "--out", d / "pitch.svg")
    for svg in ("shap.svg", "teams.svg", "pitch.svg"):
        ET.parse(d / svg)
    code, _, err = run("plot", "pitch", "--data", d / "data", "--match", "R1M1", "--frame", -1, "--out", d / "x.svg")
    assert code == 1 and "no frame -1" in err and not (d / "x.svg").exists()


def test_ingest_reports_counts(pipeline, tmp_path):
    out = ok("ingest", "--data", pipeline / "data", "--out", tmp_path / "copy")
    assert out.startswith("matches 6")
    assert (tmp_path / "copy" / "tracking.csv").read_bytes() == (pipeline / "data" / "tracking.csv").read_bytes()


def test_repeated_runs_are_byte_identical(pipeline, tmp_path):
    d = pipeline
    ok("featurize", "--data", d / "data", "--labels", d / "labels.csv", "--out", tmp_path / "f.csv", "--jobs", 2)
    assert (tmp_path / "f.csv").read_bytes() == (d / "features.csv").read_bytes()
    ok("train", "--features", tmp_path / "f.csv", "--out", tmp_path / "m.json")
    assert (tmp_path / "m.json").read_bytes() == (d / "model.json").read_bytes()


def test_unknown_flag_prints_usage_and_exits_1():
    code, _, err = run("label", "--data", "x", "--out", "y", "--bogus")
    assert code == 1 and "usage:" in err and "--bogus" in err
    assert run()[0] == 1


def test_console_entry_point_exit_codes(tmp_path):
    bad = subprocess.run([sys.executable, "-m", "linebreak.cli", "train", "--nope"], capture_output=True, text=True)
    assert bad.returncode == 1 and "usage:" in bad.stderr
    missing = subprocess.run([sys.executable, "-m", "linebreak.cli", "ingest", "--data", str(tmp_path / "none")],
                             capture_output=True, text=True)
    assert missing.returncode == 2


def test_config_file_sets_defaults_and_flags_win(pipeline, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# training run\nseed = 3\nmodel.n_estimators = 4\nmodel.max_depth=2\n")
    ok("--config", cfg, "train", "--features", pipeline / "features.csv", "--out", tmp_path / "a.json")
    ok("--config", cfg, "train", "--features", pipeline / "features.csv", "--out", tmp_path / "b.json", "--seed", 5)
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a["config"]["seed"] == 3 and b["config"]["seed"] == 5
    assert len(a["trees"]) <= 4 and a["config"]["max_depth"] == 2
    cfg.write_text("model.depth = 2\n")
    code, _, err = run("--config", cfg, "train", "--features", pipeline / "features.csv", "--out", tmp_path / "c.json")
    assert code == 1 and "model.depth" in err and not (tmp_path / "c.json").exists()
    cfg.write_text("colour = red\n")
    assert run("--config", cfg, "ingest", "--data", pipeline / "data")[0] == 1
    cfg.write_text("plot.size = 3\n")
    assert run("--config", cfg, "ingest", "--data", pipeline / "data")[0] == 1


def test_mismatched_model_names_the_column(pipeline, tmp_path):
    model = json.loads((pipeline / "model.json").read_text())
    model["feature_names"][7] = "Line Gap 1"
    (tmp_path / "m.json").write_text(json.dumps(model))
    code, _, err = run("predict", "--model", tmp_path / "m.json", "--features", pipeline / "features.csv")
    assert code == 1 and "'Line Gap1'" in err and "column 7" in err


def test_drifted_features_file_names_the_column(pipeline, tmp_path):
    lines = (pipeline / "features.csv").read_text().splitlines(keepends=True)
    lines[0] = lines[0].replace("o_3_vy", "o_3_speed")
    (tmp_path / "f.csv").write_text("".join(lines))
    code, _, err = run("train", "--features", tmp_path / "f.csv", "--out", tmp_path / "m.json")
    assert code == 1 and "o_3_speed" in err
    assert not (tmp_path / "m.json").exists()


def test_failures_leave_no_partial_output(pipeline, tmp_path):
    (tmp_path / "labels.csv").write_text("pass_id,label\nx,1\n")
    code, _, _ = run("featurize", "--data", pipeline / "data", "--labels", tmp_path / "labels.csv",
                     "--out", tmp_path / "f.csv")
    assert code == 1 and not (tmp_path / "f.csv").exists()
    keep = tmp_path / "keep.csv"
    keep.write_text("precious\n")
    code, _, _ = run("label", "--data", tmp_path / "missing", "--out", keep)
    assert code == 2 and keep.read_text() == "precious\n"
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_schema_order_is_what_the_features_file_carries(pipeline):
    header = (pipeline / "features.csv").read_text().splitlines()[0].split(",")
    assert header == FEATURE_NAMES + ["label", "pass_id"]
