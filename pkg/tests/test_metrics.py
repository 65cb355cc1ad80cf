import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from linebreak.ingest import MatchInfo
from linebreak.metrics import (
    ConfusionMatrix, SingleClass, ZeroVariance, auc, brier, evaluate_predictions, f1_from_confusion, pearson,
    read_report, read_team_scatter, regularized_beta, t_two_sided_p, teamreport, write_confusion, write_report,
    write_team_scatter,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_auc_examples():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert auc([0.5, 0.5], [0, 1]) == 0.5


def test_auc_of_unrelated_scores_is_near_one_half():
    rng = np.random.default_rng(0)
    assert auc(rng.random(20000), rng.integers(0, 2, 20000)) == pytest.approx(0.5, abs=0.02)


def test_auc_matches_pair_counting(rng):
    s = rng.integers(0, 5, 60) / 4
    y = rng.integers(0, 2, 60)
    pos, neg = s[y == 1], s[y == 0]
    pairs = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    assert auc(s, y) == pytest.approx(pairs / (len(pos) * len(neg)))


@settings(max_examples=50)
@given(st.lists(st.integers(0, 1000), min_size=4, max_size=40), st.integers(0, 2**16))
def test_auc_ignores_monotone_transforms(scores, seed):
    y = np.random.default_rng(seed).integers(0, 2, len(scores))
    assume(0 < y.sum() < len(y))
    s = np.array(scores) / 1000  # a grid keeps the transform strictly monotone in floating point
    assert auc(np.exp(3 * s) - 7, y) == pytest.approx(auc(s, y), abs=1e-12)


def test_auc_needs_both_classes():
    with pytest.raises(SingleClass):
        auc([0.2, 0.3], [1, 1])


def test_brier_examples():
    assert brier([1.0, 0.0], [1, 0]) == 0.0
    assert brier([0.5] * 5, [1, 0, 0, 1, 1]) == 0.25
    assert brier([0.9, 0.2], [1, 0]) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        brier([1.1], [1])


def test_brier_is_smallest_at_the_true_probability(rng):
    y = (rng.random(40000) < 0.3).astype(int)
    grid = np.linspace(0, 1, 101)
    scores = [brier(np.full(len(y), c), y) for c in grid]
    assert grid[int(np.argmin(scores))] == pytest.approx(y.mean(), abs=0.01)


def test_f1_of_a_rare_event_confusion_matrix():
    f = f1_from_confusion(ConfusionMatrix(tp=115, fp=234, tn=73626, fn=1039))
    assert f.precision == pytest.approx(0.3295, abs=1e-4)
    assert f.recall == pytest.approx(0.0997, abs=1e-4)
    assert f.value == pytest.approx(0.1530, abs=1e-4)


def test_f1_degenerate_and_perfect():
    f = f1_from_confusion(ConfusionMatrix(0, 0, 10, 0))
    assert f.value == 0.0 and f.degenerate
    assert f1_from_confusion(ConfusionMatrix.from_predictions([1, 0, 1], [1, 0, 1])).value == 1.0


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_f1_agrees_with_pairwise_counting(pairs):
    pred = [p for p, _ in pairs]
    lab = [y for _, y in pairs]
    tp = sum(p and y for p, y in pairs)
    predicted, actual = sum(pred), sum(lab)
    direct = 2 * tp / (predicted + actual) if tp else 0.0
    assert f1_from_confusion(ConfusionMatrix.from_predictions(pred, lab)).value == pytest.approx(direct, abs=1e-15)


def test_confusion_counts_add():
    a = ConfusionMatrix.from_predictions([1, 1, 0, 0], [1, 0, 1, 0])
    assert (a.tp, a.fp, a.fn, a.tn) == (1, 1, 1, 1)
    assert (a + a).n == 8


def test_pearson_examples():
    x = np.arange(1.0, 6.0)
    assert pearson(x, 2 * x).r == pytest.approx(1.0)
    assert pearson(x, -x).r == pytest.approx(-1.0)
    c = pearson([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    assert c.r == pytest.approx(0.8, abs=1e-9)
    t = 0.8 * np.sqrt(3 / (1 - 0.64))
    assert t == pytest.approx(2.309, abs=1e-3)
    assert c.p_value == pytest.approx(2 * stats.t.sf(t, 3), abs=1e-9)
    assert c.p_value == pytest.approx(0.104, abs=1e-3)


def test_pearson_rejects_degenerate_series():
    with pytest.raises(ZeroVariance):
        pearson([1, 2, 3], [4, 4, 4])
    with pytest.raises(ValueError):
        pearson([1, 2], [3, 4])


@given(st.lists(finite, min_size=3, max_size=30), st.floats(0.1, 50), st.floats(-100, 100), st.booleans())
def test_pearson_of_an_affine_image_is_plus_or_minus_one(x, a, b, flip):
    x = np.array(x)
    assume(np.ptp(x) > 1e-3)
    a = -a if flip else a
    assert pearson(x, a * x + b).r == pytest.approx(-1.0 if flip else 1.0, abs=1e-9)


@pytest.mark.parametrize("x, a, b", [(0.3, 2.0, 5.0), (0.9, 0.5, 0.5), (0.01, 1.5, 30.0), (0.5, 40.0, 40.0)])
def test_regularized_beta_matches_scipy(x, a, b):
    assert regularized_beta(x, a, b) == pytest.approx(stats.beta.cdf(x, a, b), abs=1e-12)


@pytest.mark.parametrize("t, df", [(0.0, 5), (2.0, 3), (-4.5, 16), (12.0, 2)])
def test_t_p_value_matches_scipy(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * stats.t.sf(abs(t), df), abs=1e-12)


def test_evaluation_report_pools_and_splits_by_fold(tmp_path):
    p = np.array([0.9, 0.1, 0.6, 0.4, 0.2, 0.8])
    y = np.array([1, 0, 0, 1, 0, 1])
    rep = evaluate_predictions(p, y, folds=[1, 1, 1, 2, 2, 2])
    assert (rep.n, rep.positives, len(rep.folds)) == (6, 3, 2)
    assert rep.confusion == ConfusionMatrix(tp=2, fp=1, tn=2, fn=1)
    assert rep.macro_f1 == pytest.approx(np.mean([f.f1 for f in rep.folds]))
    write_report(rep, tmp_path / "m.json")
    assert read_report(tmp_path / "m.json")["auc"] == rep.auc
    assert json.loads((tmp_path / "m.json").read_text())["confusion"]["tp"] == 2
    write_confusion(rep.confusion, tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[2] == "actual_1,1,2"


def _matches():
    return [MatchInfo("M1", 1, "A", "B", "right", 3, 1, 2, 0), MatchInfo("M2", 2, "C", "A", "right", 0, 4, 1, 1),
            MatchInfo("M3", 3, "B", "C", "right", 2, 2, 0, 3)]


def test_single_team_without_predictions_keeps_its_conceded_count():
    m = [MatchInfo("M1", 1, "A", "B", "right", 3, 1, 2, 0)]
    rep = teamreport({"p": 0.4}, [("p", "M1", "home")], m)
    assert [(t.team, t.predicted_breaks, t.conceded) for t in rep.teams] == [("B", 0.4, 1)]
    assert rep.excluded == ["A"] and rep.correlation is None


def test_team_sums_respect_the_window():
    preds = {"a": 0.5, "b": 0.25, "c": 0.125, "d": 1.0}
    passes = [("a", "M1", "home"), ("b", "M2", "home"), ("c", "M2", "away"), ("d", "M3", "away"),
              ("unscored", "M1", "away")]
    rep = teamreport(preds, passes, _matches(), window=1)
    got = {t.team: (t.predicted_breaks, t.conceded, t.matches) for t in rep.teams}
    # with one match each, A only counts M1, where it never defended
    assert got == {"B": (0.5, 1, 1), "C": (0.125, 1, 1)} and rep.excluded == ["A"]
    full = {t.team: (t.predicted_breaks, t.conceded) for t in teamreport(preds, passes, _matches()).teams}
    assert full == {"A": (0.25, 10), "B": (1.5, 3), "C": (0.125, 6)}


def test_identical_teams_leave_the_correlation_undefined():
    ms = [MatchInfo(f"M{i}", 1, f"H{i}", f"A{i}", "right", 1, 1, 1, 1) for i in range(3)]
    passes = [(f"p{i}{s}", f"M{i}", s) for i in range(3) for s in ("home", "away")]
    rep = teamreport({pid: 0.3 for pid, _, _ in passes}, passes, ms)
    assert len(rep.teams) == 6 and rep.correlation is None


def test_planted_league_correlates_with_conceded_chances(tmp_path):
    from linebreak.synth import SynthConfig, generate

    r = generate(SynthConfig(seed=0, passes_per_match=80, target_positive_rate=0.1))
    ds = r.dataset
    rep = teamreport({k: float(v) for k, v in r.truth.items()},
                     [(p.pass_id, p.match_id, p.team_in_possession) for p in ds.all_passes()],
                     list(ds.matches.values()), window=5)
    assert len(rep.teams) == 18
    assert rep.correlation.r > 0.4 and rep.correlation.p_value < 0.05
    write_team_scatter(rep, tmp_path / "teams.csv")
    back = read_team_scatter(tmp_path / "teams.csv")
    assert [t.team for t in back] == [t.team for t in rep.teams]
    assert [t.conceded for t in back] == [t.conceded for t in rep.teams]
