import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linebreak.gbdt import (
    DegenerateLabels, SchemaMismatch, TrainConfig, Tree, TreeEnsemble, classify, cross_validate, dumps,
    load_model, loads, save_model, stratified_holdout, train,
)

FOUR = np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1])
STUMP = TrainConfig(n_estimators=1, learning_rate=1.0, max_depth=1, min_child_weight=0.0)


def toy(n=400, m=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, m))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(0, 0.5, n) > 0.8).astype(int)
    return X, y


def route(tree, X):
    """Node path of every row, walked in plain Python."""
    paths = []
    for x in X:
        i, path = 0, [0]
        while tree.left[i] >= 0:
            i = tree.left[i] if x[tree.feature[i]] < tree.threshold[i] else tree.right[i]
            path.append(i)
        paths.append(path)
    return paths


def test_four_point_stump_matches_the_hand_computation():
    t = train(*FOUR, STUMP).trees[0]
    assert 2 < t.threshold[0] <= 3
    assert t.value[1] == pytest.approx(-2 / 3) and t.value[2] == pytest.approx(2 / 3)
    assert t.cover.tolist() == [4.0, 2.0, 2.0]
    assert t.gain[0] == pytest.approx(2 / 3)


def test_default_child_weight_blocks_the_tiny_fixture_split():
    t = train(*FOUR, TrainConfig(n_estimators=1, learning_rate=1.0, max_depth=1)).trees[0]
    assert t.n_nodes == 1


def test_no_signal_with_heavy_pruning_stays_at_one_half():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4))
    y = np.tile([0, 1], 100)
    m = train(X, y, TrainConfig(n_estimators=20, gamma=1e6))
    assert np.max(np.abs(m.predict_proba(X) - 0.5)) < 1e-6


def test_empty_ensemble_predicts_exactly_one_half():
    assert TreeEnsemble([], 0.1).predict_proba(np.zeros((3, 2))).tolist() == [0.5, 0.5, 0.5]


def test_single_leaf_is_its_sigmoid():
    w = 1.3
    p = TreeEnsemble([Tree.leaf(w)], 1.0).predict_proba([[0.0]])[0]
    assert p == pytest.approx(1 / (1 + np.exp(-w)), abs=1e-15)


@pytest.mark.parametrize("p, c", [(0.870, 1), (0.4999, 0), (0.5, 1), (0.0, 0), (1.0, 1)])
def test_classify_threshold(p, c):
    assert classify(p) == c


def test_classify_rejects_non_probabilities():
    with pytest.raises(ValueError):
        classify([0.2, 1.2])


def test_model_round_trips_through_text_and_disk(tmp_path):
    X, y = toy()
    m = train(X, y, TrainConfig(n_estimators=15), feature_names=[f"f{i}" for i in range(5)])
    assert loads(dumps(m)).predict_proba(X).tolist() == m.predict_proba(X).tolist()
    save_model(m, tmp_path / "m.json")
    again = load_model(tmp_path / "m.json")
    assert np.max(np.abs(again.predict_proba(X) - m.predict_proba(X))) <= 1e-12
    assert dumps(again) == dumps(m)


def test_training_loss_never_increases():
    X, y = toy(600, 6, seed=4)
    loss = train(X, y, TrainConfig(n_estimators=40)).history["train_logloss"]
    assert all(b <= a + 1e-12 for a, b in zip(loss, loss[1:]))
    assert loss[-1] < loss[0]


def test_every_accepted_split_satisfies_the_gain_formula():
    X, y = toy(300, 4, seed=5)
    lam, gamma = 1.0, 0.05
    t = train(X, y, TrainConfig(n_estimators=1, max_depth=4, gamma=gamma)).trees[0]
    g, h = 0.5 - y, np.full(len(y), 0.25)
    members = {}
    for r, path in enumerate(route(t, X)):
        for node in path:
            members.setdefault(node, []).append(r)
    splits = 0
    for node, rows in members.items():
        rows = np.array(rows)
        assert t.cover[node] == len(rows)
        if t.left[node] < 0:
            assert t.value[node] == pytest.approx(-g[rows].sum() / (h[rows].sum() + lam))
            continue
        left = np.array(members[t.left[node]])
        right = np.array(members[t.right[node]])
        gl, hl, gr, hr = g[left].sum(), h[left].sum(), g[right].sum(), h[right].sum()
        gain = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - (gl + gr) ** 2 / (hl + hr + lam)) - gamma
        assert gain > 0 and t.gain[node] == pytest.approx(gain)
        splits += 1
    assert splits >= 3


@settings(max_examples=15, deadline=None)
@given(st.randoms(use_true_random=False))
def test_row_order_does_not_change_the_model(rnd):
    X, y = toy(150, 4, seed=6)
    X[::7, 2] = X[0, 2]  # ties in one column
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    cfg = TrainConfig(n_estimators=5, max_depth=3)
    assert dumps(train(X[perm], y[perm], cfg)) == dumps(train(X, y, cfg))


def test_probability_is_monotone_in_each_leaf_weight():
    X, y = toy(200, 3, seed=7)
    m = train(X, y, TrainConfig(n_estimators=3, max_depth=2))
    base = m.predict_proba(X)
    t = m.trees[1]
    leaf = int(np.flatnonzero(t.left < 0)[0])
    t.value[leaf] += 0.5
    m._packed = None
    bumped = m.predict_proba(X)
    reached = np.array([path[-1] == leaf for path in route(t, X)])
    assert np.all(bumped[reached] > base[reached]) and np.all(bumped[~reached] == base[~reached])


def test_single_class_labels_are_refused():
    with pytest.raises(DegenerateLabels):
        train(np.zeros((5, 2)), np.zeros(5, dtype=int))


def test_predicting_with_the_wrong_columns_names_the_column():
    X, y = toy(100, 3)
    m = train(X, y, TrainConfig(n_estimators=2), feature_names=["a", "b", "c"])
    with pytest.raises(SchemaMismatch) as exc:
        m.predict_proba(X, names=["a", "x", "c"])
    assert exc.value.column == "x"
    with pytest.raises(SchemaMismatch):
        m.predict_proba(X[:, :2])


def test_validation_set_triggers_early_stopping():
    X, y = toy(500, 5, seed=8)
    hold = stratified_holdout(y, 0.2, 0)
    m = train(X[~hold], y[~hold], TrainConfig(n_estimators=300, early_stopping_rounds=5), X[hold], y[hold])
    assert 0 < len(m.trees) < 300
    assert m.history["best_iteration"] == len(m.trees)
    assert abs(hold.sum() - 100) <= 1 and 0 < y[hold].sum() < hold.sum()


def test_cross_validation_partitions_by_round():
    X, y = toy(500, 5, seed=9)
    rounds = np.repeat([1, 2, 3, 4, 5], 100)
    ids = [f"p{i:03d}" for i in range(500)]
    cv = cross_validate(X, y, rounds, ids, TrainConfig(n_estimators=10))
    assert len(cv.folds) == 5 and np.all(np.isfinite(cv.proba))
    tested = [pid for f in cv.folds for pid in f.test_ids]
    assert sorted(tested) == ids
    for f in cv.folds:
        assert not set(f.train_ids) & set(f.test_ids)
        assert {rounds[ids.index(p)] for p in f.test_ids} == {f.round}


def test_two_round_toy_trains_both_folds():
    X, y = toy(200, 3, seed=10)
    cv = cross_validate(X, y, np.repeat([1, 2], 100), [str(i) for i in range(200)], TrainConfig(n_estimators=5))
    assert [f.round for f in cv.folds] == [1, 2] and all(f.model.trees for f in cv.folds)
    with pytest.raises(ValueError):
        cross_validate(X, y, np.ones(200), [str(i) for i in range(200)])


def test_config_rejects_nonsense():
    for bad in ({"learning_rate": 0.0}, {"max_depth": 0}, {"gamma": -1.0}, {"subsample": 1.5}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    assert TrainConfig.from_dict({"max_depth": "3"}).max_depth == 3
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"depth": 3})
