"""Second-order gradient boosting of depth-limited regression trees for binary labels.

Each round fits one tree to the gradient ``g = w (p - y)`` and hessian
``h = w p (1 - p)`` of the logistic loss at the current margin, choosing
splits exactly over sorted feature values with gain

    0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma

and leaf weights ``-G/(H+lambda)``. The model margin is
``logit(base_probability) + sum_k learning_rate * tree_k(x)``; with the
default base probability of 0.5 the initial margin is zero.

Trees grow level by level. At each level every feature is scanned once in
presorted order, updating per-node running sums, so a level costs
O(features * rows). Ties between equally good splits go to the lowest
feature index and then to the lowest threshold, and training rows are put in
a canonical order first, so the fitted model does not depend on row order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numba
import numpy as np

from ._io import atomic_write

MODEL_VERSION = 1


class DegenerateLabels(ValueError):
    pass


class SchemaMismatch(ValueError):
    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class TrainConfig:
    n_estimators: int = 500
    learning_rate: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    l2_lambda: float = 1.0
    gamma: float = 0.0
    early_stopping_rounds: int = 25
    positive_class_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    validation_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_child_weight < 0 or self.l2_lambda < 0 or self.gamma < 0:
            raise ValueError("min_child_weight, l2_lambda and gamma must be >= 0")
        if self.early_stopping_rounds < 1:
            raise ValueError("early_stopping_rounds must be >= 1")
        if self.positive_class_weight <= 0:
            raise ValueError("positive_class_weight must be > 0")
        if not (0.0 < self.subsample <= 1.0 and 0.0 < self.colsample <= 1.0):
            raise ValueError("subsample and colsample must lie in (0, 1]")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown training options: {', '.join(sorted(unknown))}")
        conv = {}
        for k, v in d.items():
            default = getattr(cls(), k)
            conv[k] = type(default)(v) if not isinstance(default, bool) else bool(v)
        return cls(**conv)


@dataclass
class Tree:
    """Flat node arrays; ``left[i] == -1`` marks a leaf, whose weight is ``value[i]``.

    A row goes left iff ``x[feature] < threshold``, or its value is missing and
    ``default_left`` is set. ``cover`` counts training rows reaching each node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def rec(i):
            return 0 if self.left[i] < 0 else 1 + max(rec(self.left[i]), rec(self.right[i]))

        return rec(0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
            "left": self.left.tolist(), "right": self.right.tolist(),
            "default_left": [bool(b) for b in self.default_left], "value": self.value.tolist(),
            "cover": self.cover.tolist(), "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["default_left"], dtype=bool), np.asarray(d["value"], dtype=float),
            np.asarray(d["cover"], dtype=float), np.asarray(d["gain"], dtype=float),
        )

    @classmethod
    def leaf(cls, weight: float, cover: float = 1.0) -> "Tree":
        return cls(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([False]),
                   np.array([float(weight)]), np.array([float(cover)]), np.array([0.0]))


@dataclass
class TreeEnsemble:
    trees: list[Tree]
    learning_rate: float
    base_probability: float = 0.5
    feature_names: Optional[tuple[str, ...]] = None
    config: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 < self.base_probability < 1.0:
            raise ValueError("base_probability must lie in (0, 1)")
        self._packed = None

    @property
    def base_margin(self) -> float:
        p = self.base_probability
        return math.log(p / (1.0 - p))

    def packed(self):
        if self._packed is None or self._packed[0] != len(self.trees):
            self._packed = (len(self.trees),) + _pack(self.trees)
        return self._packed[1:]

    def check_columns(self, names: Optional[Sequence[str]], n_columns: int) -> None:
        if self.feature_names is not None and names is not None:
            for i, (a, b) in enumerate(zip(names, self.feature_names)):
                if a != b:
                    raise SchemaMismatch(f"feature column {i} is {a!r}, model expects {b!r}", a)
            if len(names) != len(self.feature_names):
                extra = list(names)[len(self.feature_names):] or list(self.feature_names)[len(names):]
                raise SchemaMismatch(f"{len(names)} feature columns, model expects {len(self.feature_names)}", extra[0])
        width = len(self.feature_names) if self.feature_names is not None else None
        if width is not None and n_columns != width:
            raise SchemaMismatch(f"{n_columns} feature values, model expects {width}")

    def margin(self, X, names: Optional[Sequence[str]] = None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.check_columns(names, X.shape[1])
        out = np.full(X.shape[0], self.base_margin)
        if self.trees:
            out += self.learning_rate * _predict_packed(X, *self.packed())
        return out

    def predict_proba(self, X, names: Optional[Sequence[str]] = None) -> np.ndarray:
        return _sigmoid(self.margin(X, names))

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "config": self.config,
            "base_probability": self.base_probability,
            "learning_rate": self.learning_rate,
            "feature_names": list(self.feature_names) if self.feature_names is not None else None,
            "history": self.history,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeEnsemble":
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        names = d.get("feature_names")
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]], learning_rate=float(d["learning_rate"]),
            base_probability=float(d["base_probability"]),
            feature_names=tuple(names) if names is not None else None,
            config=dict(d.get("config", {})), history=dict(d.get("history", {})),
        )


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def dumps(model: TreeEnsemble) -> str:
    """Canonical JSON text; floats use the shortest round-trip decimal form."""
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def loads(text: str) -> TreeEnsemble:
    return TreeEnsemble.from_dict(json.loads(text))


def save_model(model: TreeEnsemble, path) -> None:
    with atomic_write(path) as fh:
        fh.write(dumps(model))


def load_model(path) -> TreeEnsemble:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def classify(p, threshold: float = 0.5):
    """1 where ``p >= threshold``; scalars in, int out."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    out = (arr >= threshold).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _pack(trees: list[Tree]):
    sizes = np.array([t.n_nodes for t in trees], dtype=np.int64)
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(sizes)
    cat = lambda name, dt: np.concatenate([getattr(t, name) for t in trees]).astype(dt)  # noqa: E731
    return (offsets, cat("feature", np.int64), cat("threshold", np.float64), cat("left", np.int64),
            cat("right", np.int64), cat("default_left", np.bool_), cat("value", np.float64))


@numba.njit(cache=True)
def _leaf_index(x, base, feature, threshold, left, right, default_left):
    i = 0
    while left[base + i] >= 0:
        v = x[feature[base + i]]
        if np.isnan(v):
            go_left = default_left[base + i]
        else:
            go_left = v < threshold[base + i]
        i = left[base + i] if go_left else right[base + i]
    return i


@numba.njit(cache=True)
def _predict_packed(X, offsets, feature, threshold, left, right, default_left, value):
    n = X.shape[0]
    out = np.zeros(n)
    for k in range(offsets.shape[0] - 1):
        base = offsets[k]
        for r in range(n):
            leaf = _leaf_index(X[r], base, feature, threshold, left, right, default_left)
            out[r] += value[base + leaf]
    return out


@numba.njit(cache=True)
def _tree_values(X, feature, threshold, left, right, default_left, value):
    n = X.shape[0]
    out = np.empty(n)
    for r in range(n):
        out[r] = value[_leaf_index(X[r], 0, feature, threshold, left, right, default_left)]
    return out


@numba.njit(cache=True)
def _grow_tree(sorted_rows, sorted_vals, n_valid, X, g, h, in_sample, feat_ok,
               max_depth, min_child_weight, lam, gamma):
    """Grow one tree level by level; returns flat node arrays and each row's leaf node."""
    n, n_feat = X.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    default_left = np.zeros(max_nodes, np.bool_)
    value = np.zeros(max_nodes)
    cover = np.zeros(max_nodes)
    gain_out = np.zeros(max_nodes)
    node_of = np.zeros(n, np.int64)
    for r in range(n):
        if not in_sample[r]:
            node_of[r] = -1
    n_nodes = 1
    level_lo, level_hi = 0, 1
    G = np.zeros(max_nodes)
    H = np.zeros(max_nodes)
    for r in range(n):
        if node_of[r] == 0:
            G[0] += g[r]
            H[0] += h[r]
            cover[0] += 1.0

    for depth in range(max_depth + 1):
        width = level_hi - level_lo
        if width == 0:
            break
        for k in range(level_lo, level_hi):
            value[k] = -G[k] / (H[k] + lam)
        if depth == max_depth:
            break
        best_gain = np.zeros(width)
        best_feat = np.full(width, -1, np.int64)
        best_thr = np.zeros(width)
        best_dl = np.zeros(width, np.bool_)
        GL = np.zeros(width)
        HL = np.zeros(width)
        Gm = np.zeros(width)
        Hm = np.zeros(width)
        last = np.zeros(width)
        seen = np.zeros(width, np.bool_)
        code = np.full(n, -1, np.int64)
        for r in range(n):
            nk = node_of[r]
            if nk >= level_lo and nk < level_hi:
                code[r] = nk - level_lo
        parent = np.empty(width)
        for k in range(width):
            parent[k] = G[level_lo + k] ** 2 / (H[level_lo + k] + lam)
        for f in range(n_feat):
            if not feat_ok[f]:
                continue
            GL[:] = 0.0
            HL[:] = 0.0
            Gm[:] = 0.0
            Hm[:] = 0.0
            seen[:] = False
            any_missing = False
            for j in range(n_valid[f], n):
                k = code[sorted_rows[f, j]]
                if k >= 0:
                    Gm[k] += g[sorted_rows[f, j]]
                    Hm[k] += h[sorted_rows[f, j]]
                    any_missing = True
            for j in range(n_valid[f]):
                r = sorted_rows[f, j]
                k = code[r]
                if k < 0:
                    continue
                v = sorted_vals[f, j]
                if seen[k] and v > last[k]:
                    gt = G[level_lo + k]
                    ht = H[level_lo + k]
                    # missing values left first; right must be strictly better
                    for side in range(2 if any_missing else 1):
                        gl = GL[k] + (Gm[k] if side == 0 else 0.0)
                        hl = HL[k] + (Hm[k] if side == 0 else 0.0)
                        hr = ht - hl
                        if hl < min_child_weight or hr < min_child_weight:
                            continue
                        gr = gt - gl
                        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent[k]) - gamma
                        # strict: earlier features and thresholds win ties
                        if gain > best_gain[k]:
                            t = last[k] + 0.5 * (v - last[k])
                            if not t > last[k]:
                                t = v
                            best_gain[k] = gain
                            best_feat[k] = f
                            best_thr[k] = t
                            best_dl[k] = side == 0
                GL[k] += g[r]
                HL[k] += h[r]
                last[k] = v
                seen[k] = True

        next_lo = n_nodes
        for k in range(width):
            nk = level_lo + k
            if best_feat[k] < 0 or not best_gain[k] > 0.0:
                continue
            feature[nk] = best_feat[k]
            threshold[nk] = best_thr[k]
            default_left[nk] = best_dl[k]
            gain_out[nk] = best_gain[k]
            left[nk] = n_nodes
            right[nk] = n_nodes + 1
            n_nodes += 2
        for r in range(n):
            nk = node_of[r]
            if nk < level_lo or nk >= level_hi:
                continue
            if left[nk] < 0:
                continue
            v = X[r, feature[nk]]
            if np.isnan(v):
                go = default_left[nk]
            else:
                go = v < threshold[nk]
            c = left[nk] if go else right[nk]
            node_of[r] = c
            G[c] += g[r]
            H[c] += h[r]
            cover[c] += 1.0
        level_lo, level_hi = next_lo, n_nodes

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            default_left[:n_nodes], value[:n_nodes], cover[:n_nodes], gain_out[:n_nodes])


def _logloss(y, p, w) -> float:
    p = np.clip(p, 1e-15, 1 - 1e-15)
    return float(np.sum(w * -(y * np.log(p) + (1 - y) * np.log1p(-p))) / np.sum(w))


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order that depends only on the multiset of (row, label) pairs."""
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def _presort(X: np.ndarray):
    n, m = X.shape
    rows = np.empty((m, n), dtype=np.int64)
    vals = np.empty((m, n))
    n_valid = np.empty(m, dtype=np.int64)
    for f in range(m):
        col = X[:, f]
        order = np.argsort(col, kind="stable")  # NaN sorts last
        rows[f] = order
        vals[f] = col[order]
        n_valid[f] = int(np.count_nonzero(~np.isnan(col)))
    return rows, vals, n_valid


def train(
    X,
    y,
    config: TrainConfig = TrainConfig(),
    X_val=None,
    y_val=None,
    feature_names: Optional[Sequence[str]] = None,
) -> TreeEnsemble:
    """Fit a boosted ensemble; early stopping watches the validation log-loss when given.

    Raises
    ------
    DegenerateLabels
        If the training labels contain only one class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (rows, features) with one label per row")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if np.all(y == y[0]) if len(y) else True:
        raise DegenerateLabels("training labels need at least one positive and one negative")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise SchemaMismatch(f"{len(feature_names)} names for {X.shape[1]} columns")
    order = canonical_order(X, y)
    X, y = X[order], y[order].astype(float)
    cfg = config
    w = np.where(y == 1, cfg.positive_class_weight, 1.0)
    rows, vals, n_valid = _presort(X)
    rng = np.random.default_rng(cfg.seed)
    use_val = X_val is not None and y_val is not None and len(y_val) > 0
    if use_val:
        X_val = np.asarray(X_val, dtype=float)
        y_val = np.asarray(y_val).astype(float)
        vorder = canonical_order(X_val, y_val)
        X_val, y_val = X_val[vorder], y_val[vorder]
        w_val = np.where(y_val == 1, cfg.positive_class_weight, 1.0)

    base = 0.0
    margin = np.zeros(len(y))
    vmargin = np.zeros(len(y_val)) if use_val else None
    trees: list[Tree] = []
    train_loss = [_logloss(y, _sigmoid(margin), w)]
    val_loss = [_logloss(y_val, _sigmoid(vmargin), w_val)] if use_val else []
    best_iter, best_val, stall = 0, val_loss[0] if use_val else math.inf, 0
    all_rows = np.ones(len(y), dtype=np.bool_)
    all_feats = np.ones(X.shape[1], dtype=np.bool_)
    for _ in range(cfg.n_estimators):
        p = _sigmoid(base + margin)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        in_sample = all_rows if cfg.subsample >= 1.0 else rng.random(len(y)) < cfg.subsample
        feat_ok = all_feats if cfg.colsample >= 1.0 else _column_mask(rng, X.shape[1], cfg.colsample)
        arrays = _grow_tree(rows, vals, n_valid, X, g, h, in_sample, feat_ok, cfg.max_depth,
                            float(cfg.min_child_weight), float(cfg.l2_lambda), float(cfg.gamma))
        tree = Tree(*[a.copy() for a in arrays])
        trees.append(tree)
        margin += cfg.learning_rate * _tree_values(X, tree.feature, tree.threshold, tree.left, tree.right,
                                                   tree.default_left, tree.value)
        train_loss.append(_logloss(y, _sigmoid(margin), w))
        if use_val:
            vmargin += cfg.learning_rate * _tree_values(X_val, tree.feature, tree.threshold, tree.left,
                                                        tree.right, tree.default_left, tree.value)
            val_loss.append(_logloss(y_val, _sigmoid(vmargin), w_val))
            if val_loss[-1] < best_val:
                best_val, best_iter, stall = val_loss[-1], len(trees), 0
            else:
                stall += 1
                if stall >= cfg.early_stopping_rounds:
                    break
    if use_val:
        trees = trees[:best_iter]
    history = {"train_logloss": train_loss, "valid_logloss": val_loss, "best_iteration": len(trees)}
    return TreeEnsemble(
        trees=trees, learning_rate=cfg.learning_rate, base_probability=0.5,
        feature_names=tuple(feature_names) if feature_names is not None else None,
        config=asdict(cfg), history=history,
    )


def _column_mask(rng, m: int, frac: float) -> np.ndarray:
    k = max(1, int(round(frac * m)))
    mask = np.zeros(m, dtype=np.bool_)
    mask[np.sort(rng.choice(m, size=k, replace=False))] = True
    return mask


def stratified_holdout(y, fraction: float, seed: int) -> np.ndarray:
    """Boolean mask of a seeded, class-stratified holdout of ``fraction`` of the rows."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    mask = np.zeros(len(y), dtype=bool)
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        k = int(round(fraction * len(idx)))
        if 0 < k < len(idx):
            mask[rng.choice(idx, size=k, replace=False)] = True
    return mask


@dataclass
class FoldResult:
    round: int
    model: TreeEnsemble
    train_ids: list[str]
    test_ids: list[str]
    test_proba: np.ndarray
    test_labels: np.ndarray


@dataclass
class CrossValidation:
    folds: list[FoldResult]
    pass_ids: list[str]
    proba: np.ndarray
    labels: np.ndarray
    rounds: np.ndarray
    skipped_rounds: list[int] = field(default_factory=list)


def cross_validate(
    X, y, groups, pass_ids: Sequence[str], config: TrainConfig = TrainConfig(),
    feature_names: Optional[Sequence[str]] = None,
) -> CrossValidation:
    """Leave-one-group-out CV; ``groups`` holds each row's round.

    Each fold trains on the other rounds, with a stratified validation
    holdout of those rows for early stopping, and scores its own round.
    Pooled out-of-fold predictions come back in ``pass_ids`` order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    groups = np.asarray(groups)
    uniq = sorted(set(groups.tolist()))
    if len(uniq) < 2:
        raise ValueError("cross-validation needs at least two rounds")
    proba = np.full(len(y), np.nan)
    folds, skipped = [], []
    for rnd in uniq:
        test = groups == rnd
        if not np.any(test):
            skipped.append(rnd)
            continue
        tr = np.flatnonzero(~test)
        hold = stratified_holdout(y[tr], config.validation_fraction, config.seed + int(rnd))
        model = train(X[tr[~hold]], y[tr[~hold]], config, X[tr[hold]], y[tr[hold]], feature_names)
        p = model.predict_proba(X[test])
        proba[test] = p
        folds.append(FoldResult(int(rnd), model, [pass_ids[i] for i in tr],
                                [pass_ids[i] for i in np.flatnonzero(test)], p, y[test]))
    return CrossValidation(folds, list(pass_ids), proba, y, groups, skipped)


__all__ = [
    "TrainConfig", "Tree", "TreeEnsemble", "DegenerateLabels", "SchemaMismatch", "train", "classify",
    "cross_validate", "save_model", "load_model", "dumps", "loads", "stratified_holdout", "canonical_order",
]
