"""``linebreak`` command line: synthetic data, labeling, features, training, evaluation and plots.

Exit status is 0 on success, 1 for invalid input or usage and 2 for I/O
failures. ``LINEBREAK_LOG`` sets the log level (default WARNING).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import gbdt, metrics, shap, svg
from ._io import atomic_write, fmt_float
from .domain import AWAY, HOME, LEFT, Pitch, attack_direction, other_side
from .features import FEATURE_NAMES, FeatureMatrix, SchemaDrift, featurize_dataset, read_features, write_features
from .geometry import defensive_line
from .ingest import Dataset, ParseError, load_dataset, write_dataset
from .labeler import attach_labels, label_dataset, read_labels, write_labels
from .synth import SynthConfig, generate, write_synth

log = logging.getLogger("linebreak")

METRICS_FILE = "metrics.json"
CONFUSION_FILE = "confusion.csv"
PREDICTIONS_FILE = "predictions.csv"
ATTRIBUTIONS_FILE = "attributions.csv"
SUMMARY_FILE = "shap_summary.csv"
POINTS_FILE = "shap_points.csv"
PREDICTION_COLUMNS = ["pass_id", "probability", "predicted", "label", "round"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def read_config(path) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment and blank lines are ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = value.strip()
    return out


def _typed_overrides(cls, options: dict[str, str], prefix: str) -> dict:
    known = {f.name for f in fields(cls)}
    out = {}
    for key, value in options.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name not in known:
            raise ValueError(f"unknown option {key!r}")
        out[name] = value
    return out


def _synth_config(args) -> SynthConfig:
    raw = _typed_overrides(SynthConfig, args.options, "synth.")
    base = SynthConfig()
    kw = {}
    for name, value in raw.items():
        default = getattr(base, name)
        if isinstance(default, tuple) or name == "pressing":
            kw[name] = tuple(float(v) for v in value.split(","))
        elif isinstance(default, Pitch):
            raise ValueError("the pitch size is fixed")
        else:
            kw[name] = type(default)(value)
    for flag, name in (("seed", "seed"), ("rounds", "n_rounds"), ("matches_per_round", "matches_per_round"),
                       ("passes_per_match", "passes_per_match"), ("rate", "target_positive_rate"),
                       ("noise", "noise_sigma_m")):
        if getattr(args, flag) is not None:
            kw[name] = getattr(args, flag)
    return SynthConfig(**kw)


def _train_config(args) -> gbdt.TrainConfig:
    cfg = gbdt.TrainConfig.from_dict(_typed_overrides(gbdt.TrainConfig, args.options, "model."))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _attach_matches(fm: FeatureMatrix, dataset: Dataset) -> FeatureMatrix:
    match_of = {p.pass_id: p.match_id for p in dataset.all_passes()}
    missing = [pid for pid in fm.pass_ids if pid not in match_of]
    if missing:
        raise ValueError(f"features mention pass {missing[0]!r}, which the dataset does not contain")
    fm.match_ids = [match_of[pid] for pid in fm.pass_ids]
    return fm


def _print(text: str) -> None:
    sys.stdout.write(text + "\n")


def cmd_synth(args) -> None:
    cfg = _synth_config(args)
    result = generate(cfg)
    write_synth(result, args.out)
    n = sum(len(v) for v in result.dataset.passes.values())
    _print(f"wrote {len(result.dataset.matches)} matches, {n} passes, "
           f"{sum(result.truth.values())} planted line breaks to {args.out}")


def cmd_ingest(args) -> None:
    ds = load_dataset(args.data)
    if args.out:
        write_dataset(ds, args.out)
    _print(f"matches {len(ds.matches)}  frames {ds.frames.n_frames}  passes {len(ds.all_passes())}")
    _print("  " + "  ".join(f"{k}={v}" for k, v in ds.report.summary().items()))
    for line, reason in ds.report.skipped_rows[:20]:
        log.info("tracking line %s skipped: %s", line, reason)


def cmd_label(args) -> None:
    ds = load_dataset(args.data)
    labels, summary = label_dataset(ds, epsilon=args.epsilon)
    write_labels(labels, args.out)
    _print(" ".join(f"{k}={fmt_float(v) if isinstance(v, float) else v}" for k, v in summary.as_dict().items()))


def cmd_featurize(args) -> None:
    ds = load_dataset(args.data)
    labeled = attach_labels(ds, read_labels(args.labels))
    fm = featurize_dataset(labeled, ds, jobs=args.jobs)
    write_features(fm, args.out)
    _print(f"wrote {len(fm)} rows x {fm.values.shape[1]} features to {args.out}")


def cmd_train(args) -> None:
    fm = read_features(args.features)
    cfg = _train_config(args)
    hold = gbdt.stratified_holdout(fm.labels, cfg.validation_fraction, cfg.seed)
    model = gbdt.train(fm.values[~hold], fm.labels[~hold], cfg, fm.values[hold], fm.labels[hold],
                       feature_names=FEATURE_NAMES)
    gbdt.save_model(model, args.out)
    _print(f"trained {len(model.trees)} trees on {int(np.sum(~hold))} rows "
           f"({int(np.sum(hold))} held out for early stopping); model at {args.out}")


def _write_predictions(path, pass_ids, proba, threshold, labels=None, rounds=None) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_COLUMNS)
        for i, pid in enumerate(pass_ids):
            w.writerow([
                pid, fmt_float(proba[i]), int(gbdt.classify(proba[i], threshold)),
                "" if labels is None else int(labels[i]), "" if rounds is None else int(rounds[i]),
            ])


def read_predictions(path) -> dict[str, float]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PREDICTION_COLUMNS:
            raise ValueError(f"{path}: predictions header must be {','.join(PREDICTION_COLUMNS)}")
        return {r["pass_id"]: float(r["probability"]) for r in reader}


def cmd_predict(args) -> None:
    model = gbdt.load_model(args.model)
    fm = read_features(args.features)
    proba = model.predict_proba(fm.values, fm.names)
    if args.out:
        _write_predictions(args.out, fm.pass_ids, proba, args.threshold, fm.labels)
    for pid, p in zip(fm.pass_ids, proba):
        _print(f"{pid}\t{p:.6f}\t{int(gbdt.classify(p, args.threshold))}")


def cmd_evaluate(args) -> None:
    fm = read_features(args.features)
    ds = load_dataset(args.data)
    _attach_matches(fm, ds)
    rounds = np.array([ds.matches[m].round for m in fm.match_ids], dtype=np.int64)
    if args.model:
        model = gbdt.load_model(args.model)
        proba = model.predict_proba(fm.values, fm.names)
    else:
        if args.folds != "by-round":
            raise ValueError(f"unsupported fold scheme {args.folds!r}")
        cv = gbdt.cross_validate(fm.values, fm.labels, rounds, fm.pass_ids, _train_config(args),
                                 feature_names=FEATURE_NAMES)
        proba = cv.proba
    report = metrics.evaluate_predictions(proba, fm.labels, rounds, args.threshold)
    out = Path(args.out)
    metrics.write_report(report, out / METRICS_FILE)
    metrics.write_confusion(report.confusion, out / CONFUSION_FILE)
    _write_predictions(out / PREDICTIONS_FILE, fm.pass_ids, proba, args.threshold, fm.labels, rounds)
    cm = report.confusion
    _print(f"AUC {report.auc:.4f}  Brier {report.brier:.4f}  F1 {report.f1:.4f} (macro {report.macro_f1:.4f})  "
           f"precision {report.precision:.4f}  recall {report.recall:.4f}")
    _print(f"TP {cm.tp}  FP {cm.fp}  TN {cm.tn}  FN {cm.fn}")


def cmd_explain(args) -> None:
    model = gbdt.load_model(args.model)
    fm = read_features(args.features)
    phi, base = shap.explain_matrix(model, fm.values, fm.names)
    summary = shap.summarize(phi, fm.values, fm.names, fm.pass_ids, top_k=args.top_k)
    out = Path(args.out)
    shap.write_attributions(fm.pass_ids, phi, base, fm.names, out / ATTRIBUTIONS_FILE)
    shap.write_summary(summary, out / SUMMARY_FILE)
    shap.write_points(summary, out / POINTS_FILE)
    for rank, name, value in summary.ranking()[: args.top_k]:
        _print(f"{rank:3d}  {value:.6f}  {name}")


def cmd_teamreport(args) -> None:
    ds = load_dataset(args.data)
    preds = read_predictions(args.predictions)
    passes = [(p.pass_id, p.match_id, p.team_in_possession) for p in ds.all_passes()]
    report = metrics.teamreport(preds, passes, list(ds.matches.values()), args.window)
    metrics.write_team_scatter(report, args.out)
    for t in report.teams:
        _print(f"{t.team}\t{t.predicted_breaks:.3f}\t{t.conceded}")
    if report.correlation is not None:
        c = report.correlation
        _print(f"pearson r = {c.r:.4f}, p = {c.p_value:.4g}, n = {c.n}")
    else:
        _print("pearson correlation undefined")


def _defending_side(ds: Dataset, match_id: str, t_ms: int) -> str:
    passes = ds.passes.get(match_id, [])
    if not passes:
        return AWAY
    nearest = min(passes, key=lambda p: (abs(p.t_ms - t_ms), p.pass_id))
    return other_side(nearest.team_in_possession)


def cmd_plot(args) -> None:
    kind = args.kind
    if kind == "pitch":
        if args.match is None or args.frame is None:
            raise UsageError("plot pitch needs --match and --frame")
        ds = load_dataset(args.data)
        if args.match not in ds.frames:
            raise ValueError(f"no tracking for match {args.match!r}")
        mf = ds.frames[args.match]
        pos = mf.locate(args.frame)
        if pos is None:
            raise ValueError(f"match {args.match} has no frame {args.frame}")
        frame = mf.frame(pos)
        side = args.defending or _defending_side(ds, args.match, frame.timestamp_ms)
        direction = attack_direction(ds.matches[args.match].home_attack_direction_p1, side, frame.period)
        xs = [p.position.x for p in frame.team(side)]
        line = defensive_line(xs, own_goal=1 if direction == LEFT else -1, team=side)
        text = svg.pitch_svg(frame, line=line)
    elif kind == "scatter":
        if not args.team:
            raise UsageError("plot scatter needs --team")
        rows = metrics.read_team_scatter(args.team)
        if not rows:
            raise ValueError(f"{args.team}: no teams to plot")
        x = [r.predicted_breaks for r in rows]
        y = [r.conceded for r in rows]
        title = ""
        try:
            c = metrics.pearson(x, y)
            title = f"r = {c.r:.3f}, p = {c.p_value:.3g}"
        except ValueError:
            pass
        text = svg.scatter_svg(x, y, [r.team for r in rows], "total predicted probability of being line-broken",
                               "crosses + shots conceded", title)
    else:
        if not args.summary:
            raise UsageError("plot shap-summary needs --summary")
        ranking = [(name, value) for name, value, _ in shap.read_summary(args.summary)]
        points = []
        if args.points:
            with open(args.points, encoding="utf-8", newline="") as fh:
                points = [(r["feature"], float(r["phi"]), float(r["value_percentile"])) for r in csv.DictReader(fh)]
        text = svg.shap_summary_svg(ranking, points, top_k=args.top_k)
    with atomic_write(args.out) as fh:
        fh.write(text)
    _print(f"wrote {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linebreak", description="Line Break detection and prediction from tracking data.")
    parser.add_argument("--config", help="key=value file; flags given on the command line win")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic league")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--matches-per-round", type=int)
    p.add_argument("--passes-per-match", type=int)
    p.add_argument("--rate", type=float, help="target line-break rate")
    p.add_argument("--noise", type=float, help="positional noise sigma in metres")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a dataset and optionally rewrite it canonically")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="label successful passes")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("featurize", help="build the 189-feature matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit a boosted tree model")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score passes with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="per-pass feature attributions")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, default=20)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="round-grouped cross-validation, or scoring of a given model")
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model")
    p.add_argument("--folds", default="by-round")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("teamreport", help="per-team break exposure against chances conceded")
    p.add_argument("--data", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_teamreport)

    p = sub.add_parser("plot", help="emit an SVG")
    p.add_argument("kind", choices=["pitch", "scatter", "shap-summary"])
    p.add_argument("--out", required=True)
    p.add_argument("--data")
    p.add_argument("--match")
    p.add_argument("--frame", type=int)
    p.add_argument("--defending", choices=[HOME, AWAY])
    p.add_argument("--team", help="team scatter CSV")
    p.add_argument("--summary", help="attribution summary CSV")
    p.add_argument("--points", help="attribution points CSV")
    p.add_argument("--top-k", type=int, default=20)
    p.set_defaults(func=cmd_plot)
    parser.commands = sub.choices
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> dict[str, str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    options = read_config(known.config)
    plain = {k.replace("-", "_"): v for k, v in options.items() if "." not in k}
    valid = set()
    for sp in parser.commands.values():
        types = {a.dest: a.type or str for a in sp._actions}
        valid |= set(types)
        # config values become defaults so explicit flags still win
        sp.set_defaults(**{k: types[k](v) for k, v in plain.items() if k in types})
    unknown = sorted((set(plain) - valid) | {k for k in options if "." in k and not k.startswith(("synth.", "model."))})
    if unknown:
        raise ValueError(f"unknown configuration key {unknown[0]!r}")
    return {k: v for k, v in options.items() if "." in k}


def _setup_logging() -> None:
    level = logging.getLevelName(os.environ.get("LINEBREAK_LOG", "WARNING").upper())
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _setup_logging()
    parser = build_parser()
    try:
        options = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        args.options = options
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (ValueError, ParseError, SchemaDrift, gbdt.SchemaMismatch, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
