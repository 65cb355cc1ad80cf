"""Classification metrics, Pearson correlation with a t-test, and the per-team exposure report."""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ._io import atomic_write, fmt_float
from .domain import AWAY, HOME, other_side
from .ingest import MatchInfo

log = logging.getLogger(__name__)


class SingleClass(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_predictions(cls, predicted, labels) -> "ConfusionMatrix":
        p = np.asarray(predicted).astype(bool)
        y = np.asarray(labels).astype(bool)
        if p.shape != y.shape:
            raise ValueError("predictions and labels differ in length")
        return cls(int(np.sum(p & y)), int(np.sum(p & ~y)), int(np.sum(~p & ~y)), int(np.sum(~p & y)))

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


class F1(NamedTuple):
    value: float
    precision: float
    recall: float
    degenerate: bool


def f1_from_confusion(cm: ConfusionMatrix) -> F1:
    """Harmonic mean of precision and recall.

    An empty prediction set or an empty positive class makes the score
    undefined; it is reported as 0 with ``degenerate`` set.
    """
    degenerate = cm.tp + cm.fp == 0 or cm.tp + cm.fn == 0
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    if cm.tp == 0:
        return F1(0.0, precision, recall, degenerate)
    return F1(2 * precision * recall / (precision + recall), precision, recall, degenerate)


def _scored(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if s.size == 0:
        raise ValueError("no scores to evaluate")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    return s, y.astype(bool)


def auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative; ties earn half credit."""
    s, y = _scored(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def brier(scores, labels) -> float:
    s, y = _scored(scores, labels)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("Brier scores must be probabilities")
    return float(np.mean((s - y) ** 2))


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        step = d * c
        h *= step
        if abs(step - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(ln_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_beta(df / (df + t * t), df / 2.0, 0.5)


class Correlation(NamedTuple):
    r: float
    p_value: float
    n: int


def pearson(x, y) -> Correlation:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two series of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("pearson needs at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("pearson is undefined for a constant series")
    r = max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))
    df = n - 2
    t = math.inf if abs(r) == 1.0 else r * math.sqrt(df / (1.0 - r * r))
    return Correlation(r, t_two_sided_p(t, df), n)


@dataclass
class FoldReport:
    round: int
    n: int
    positives: int
    auc: Optional[float]
    brier: float
    f1: float
    precision: float
    recall: float
    confusion: ConfusionMatrix


@dataclass
class EvaluationReport:
    n: int
    positives: int
    threshold: float
    auc: float
    brier: float
    f1: float
    precision: float
    recall: float
    f1_degenerate: bool
    macro_f1: float
    confusion: ConfusionMatrix
    folds: list[FoldReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _fold_report(rnd: int, p, y, threshold: float) -> FoldReport:
    cm = ConfusionMatrix.from_predictions(p >= threshold, y)
    f = f1_from_confusion(cm)
    try:
        a = auc(p, y)
    except SingleClass:
        a = None
    return FoldReport(int(rnd), len(y), int(np.sum(y)), a, brier(p, y), f.value, f.precision, f.recall, cm)


def evaluate_predictions(proba, labels, folds=None, threshold: float = 0.5) -> EvaluationReport:
    """Pooled metrics over all rows plus one sub-report per fold.

    ``folds`` gives each row's fold key; the macro F1 is the plain mean of
    the per-fold scores and sits beside the pooled one.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    p, y = _scored(proba, labels)
    y = y.astype(int)
    cm = ConfusionMatrix.from_predictions(p >= threshold, y)
    f = f1_from_confusion(cm)
    fold_reports = []
    if folds is not None:
        keys = np.asarray(folds)
        for k in sorted(set(keys.tolist())):
            sel = keys == k
            fold_reports.append(_fold_report(k, p[sel], y[sel], threshold))
    macro = float(np.mean([r.f1 for r in fold_reports])) if fold_reports else f.value
    return EvaluationReport(len(y), int(y.sum()), threshold, auc(p, y), brier(p, y), f.value, f.precision,
                            f.recall, f.degenerate, macro, cm, fold_reports)


def _jsonable(v):
    if isinstance(v, float):
        return float(fmt_float(v))
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def write_report(report: EvaluationReport, path) -> None:
    with atomic_write(path) as fh:
        json.dump(_jsonable(report.to_dict()), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_confusion(cm: ConfusionMatrix, path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["", "predicted_0", "predicted_1"])
        w.writerow(["actual_0", cm.tn, cm.fp])
        w.writerow(["actual_1", cm.fn, cm.tp])


@dataclass(frozen=True)
class TeamExposure:
    team: str
    matches: int
    defensive_passes: int
    predicted_breaks: float
    conceded: int


@dataclass
class TeamReport:
    teams: list[TeamExposure]
    correlation: Optional[Correlation]
    excluded: list[str]


def teamreport(
    predictions: Mapping[str, float],
    passes: Iterable[tuple[str, str, str]],
    matches: Sequence[MatchInfo],
    window: Optional[int] = None,
) -> TeamReport:
    """Per defending team: summed break probability against it and its crosses plus shots conceded.

    ``passes`` yields ``(pass_id, match_id, side_in_possession)``; passes
    without a prediction are ignored. Each team's window is its first
    ``window`` matches by round (all when None). Teams that faced no scored
    pass are dropped with a warning. The correlation is None when fewer than
    three teams remain or either column is constant.
    """
    if window is not None and window < 1:
        raise ValueError("window must be >= 1")
    by_id = {m.match_id: m for m in matches}
    played: dict[str, list[MatchInfo]] = defaultdict(list)
    for m in sorted(matches, key=lambda m: (m.round, m.match_id)):
        played[m.home_team].append(m)
        played[m.away_team].append(m)
    in_window: dict[tuple[str, str], bool] = {}
    for team, ms in played.items():
        for m in (ms if window is None else ms[:window]):
            in_window[(team, m.match_id)] = True
    prob: dict[str, float] = defaultdict(float)
    count: dict[str, int] = defaultdict(int)
    for pass_id, match_id, possession in passes:
        if pass_id not in predictions:
            continue
        m = by_id.get(match_id)
        if m is None:
            raise ValueError(f"pass {pass_id} belongs to unknown match {match_id!r}")
        defender = m.team(other_side(possession))
        if in_window.get((defender, match_id)):
            prob[defender] += float(predictions[pass_id])
            count[defender] += 1
    rows, excluded = [], []
    for team in sorted(played):
        ms = played[team] if window is None else played[team][:window]
        if count[team] == 0:
            log.warning("team %s faced no scored passes; excluded from the team report", team)
            excluded.append(team)
            continue
        conceded = sum(m.conceded(HOME if m.home_team == team else AWAY) for m in ms)
        rows.append(TeamExposure(team, len(ms), count[team], prob[team], conceded))
    corr = None
    if len(rows) >= 3:
        try:
            corr = pearson([r.predicted_breaks for r in rows], [r.conceded for r in rows])
        except ZeroVariance:
            log.warning("team report columns have no variance; correlation undefined")
    return TeamReport(rows, corr, excluded)


def write_team_scatter(report: TeamReport, path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team", "matches", "defensive_passes", "predicted_breaks", "conceded"])
        for r in report.teams:
            w.writerow([r.team, r.matches, r.defensive_passes, fmt_float(r.predicted_breaks), r.conceded])


def read_team_scatter(path) -> list[TeamExposure]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [TeamExposure(r["team"], int(r["matches"]), int(r["defensive_passes"]),
                             float(r["predicted_breaks"]), int(r["conceded"])) for r in csv.DictReader(fh)]


__all__ = [
    "ConfusionMatrix", "F1", "f1_from_confusion", "auc", "brier", "pearson", "Correlation", "regularized_beta",
    "t_two_sided_p", "EvaluationReport", "FoldReport", "evaluate_predictions", "write_report", "read_report",
    "write_confusion", "TeamExposure", "TeamReport", "teamreport", "write_team_scatter", "read_team_scatter",
    "SingleClass", "ZeroVariance",
]
