"""Exact Shapley attributions for boosted tree ensembles, in margin (log-odds) space.

The value of a feature coalition ``S`` for one tree is the tree output
averaged over the training rows that agree with ``x`` on the features in
``S``, approximated path-wise: at a split on a feature outside ``S`` both
children are followed and weighted by their share of the node's training
cover. The polynomial-time path algorithm below tracks, for every root-to-leaf
path, the proportion of coalitions of each size that reach the leaf, and
yields the same values as enumerating all coalitions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.stats import rankdata

from ._io import atomic_write, fmt_float
from .gbdt import Tree, TreeEnsemble


class MissingCover(ValueError):
    pass


@dataclass(frozen=True)
class Attribution:
    pass_id: str
    phi: np.ndarray
    base_value: float

    @property
    def margin(self) -> float:
        return self.base_value + float(np.sum(self.phi))


@numba.njit(cache=True)
def _extend(pf, pz, po, pw, off, depth, zero, one, feat):
    pf[off + depth] = feat
    pz[off + depth] = zero
    po[off + depth] = one
    pw[off + depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pw[off + i + 1] += one * pw[off + i] * (i + 1) / (depth + 1)
        pw[off + i] = zero * pw[off + i] * (depth - i) / (depth + 1)


@numba.njit(cache=True)
def _unwind(pf, pz, po, pw, off, depth, idx):
    one = po[off + idx]
    zero = pz[off + idx]
    nxt = pw[off + depth]
    for i in range(depth - 1, -1, -1):
        if one != 0.0:
            tmp = pw[off + i]
            pw[off + i] = nxt * (depth + 1) / ((i + 1) * one)
            nxt = tmp - pw[off + i] * zero * (depth - i) / (depth + 1)
        else:
            pw[off + i] = pw[off + i] * (depth + 1) / (zero * (depth - i))
    for i in range(idx, depth):
        pf[off + i] = pf[off + i + 1]
        pz[off + i] = pz[off + i + 1]
        po[off + i] = po[off + i + 1]


@numba.njit(cache=True)
def _unwound_sum(pz, po, pw, off, depth, idx):
    one = po[off + idx]
    zero = pz[off + idx]
    nxt = pw[off + depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one != 0.0:
            tmp = nxt * (depth + 1) / ((i + 1) * one)
            total += tmp
            nxt = pw[off + i] - tmp * zero * ((depth - i) / (depth + 1))
        elif zero != 0.0:
            total += (pw[off + i] / zero) / ((depth - i) / (depth + 1))
    return total


# recursive kernels crash when reloaded from numba's on-disk cache, so they compile per process
@numba.njit
def _recurse(node, x, phi, scale, feature, threshold, left, right, default_left, value, cover,
             pf, pz, po, pw, parent_off, depth, zero, one, feat):
    off = parent_off + depth + 1
    for i in range(depth + 1):
        pf[off + i] = pf[parent_off + i]
        pz[off + i] = pz[parent_off + i]
        po[off + i] = po[parent_off + i]
        pw[off + i] = pw[parent_off + i]
    _extend(pf, pz, po, pw, off, depth, zero, one, feat)
    if left[node] < 0:
        for i in range(1, depth + 1):
            w = _unwound_sum(pz, po, pw, off, depth, i)
            phi[pf[off + i]] += w * (po[off + i] - pz[off + i]) * value[node] * scale
        return
    split = feature[node]
    v = x[split]
    if np.isnan(v):
        go_left = default_left[node]
    else:
        go_left = v < threshold[node]
    hot = left[node] if go_left else right[node]
    cold = right[node] if go_left else left[node]
    hot_zero = cover[hot] / cover[node]
    cold_zero = cover[cold] / cover[node]
    in_zero = 1.0
    in_one = 1.0
    idx = -1
    for i in range(depth + 1):
        if pf[off + i] == split:
            idx = i
            break
    if idx >= 0:
        in_zero = pz[off + idx]
        in_one = po[off + idx]
        _unwind(pf, pz, po, pw, off, depth, idx)
        depth -= 1
    _recurse(hot, x, phi, scale, feature, threshold, left, right, default_left, value, cover,
             pf, pz, po, pw, off, depth + 1, hot_zero * in_zero, in_one, split)
    _recurse(cold, x, phi, scale, feature, threshold, left, right, default_left, value, cover,
             pf, pz, po, pw, off, depth + 1, cold_zero * in_zero, 0.0, split)


@numba.njit
def _explain_rows(X, offsets, max_depths, scale, feature, threshold, left, right, default_left, value, cover):
    n, m = X.shape
    phi = np.zeros((n, m))
    dmax = 0
    for d in max_depths:
        dmax = max(dmax, d)
    size = (dmax + 2) * (dmax + 3) // 2 + dmax + 2
    pf = np.zeros(size, np.int64)
    pz = np.zeros(size)
    po = np.zeros(size)
    pw = np.zeros(size)
    for k in range(offsets.shape[0] - 1):
        lo = offsets[k]
        hi = offsets[k + 1]
        for r in range(n):
            # the root call extends an empty path whose slot 0 is a placeholder
            pf[0] = -1
            _recurse(0, X[r], phi[r], scale, feature[lo:hi], threshold[lo:hi], left[lo:hi], right[lo:hi],
                     default_left[lo:hi], value[lo:hi], cover[lo:hi], pf, pz, po, pw, -1, 0, 1.0, 1.0, -1)
    return phi


def _check_cover(tree: Tree, k: int) -> None:
    if np.any(tree.cover <= 0):
        node = int(np.flatnonzero(tree.cover <= 0)[0])
        raise MissingCover(f"tree {k} node {node} has no training cover; attributions need recorded covers")


def expected_value(ensemble: TreeEnsemble) -> float:
    """Cover-weighted mean margin over the training rows, i.e. the attribution baseline."""
    total = ensemble.base_margin
    for k, t in enumerate(ensemble.trees):
        _check_cover(t, k)
        leaves = t.left < 0
        total += ensemble.learning_rate * float(np.sum(t.cover[leaves] * t.value[leaves]) / t.cover[0])
    return total


def explain_matrix(ensemble: TreeEnsemble, X, names: Optional[Sequence[str]] = None):
    """Attributions for every row of ``X``; returns ``(phi, base_value)`` with phi (rows, features)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ensemble.check_columns(names, X.shape[1])
    base = expected_value(ensemble)
    if not ensemble.trees:
        return np.zeros(X.shape), base
    offsets, feature, threshold, left, right, default_left, value = ensemble.packed()
    cover = np.concatenate([t.cover for t in ensemble.trees]).astype(float)
    depths = np.array([t.depth for t in ensemble.trees], dtype=np.int64)
    if int(feature.max(initial=-1)) >= X.shape[1]:
        raise ValueError("model splits on a column the matrix does not have")
    phi = _explain_rows(X, offsets, depths, float(ensemble.learning_rate), feature, threshold, left, right,
                        default_left, value, cover)
    return phi, base


def explain(ensemble: TreeEnsemble, row, pass_id: str = "") -> Attribution:
    phi, base = explain_matrix(ensemble, np.asarray(row, dtype=float)[None, :])
    return Attribution(pass_id, phi[0], base)


@dataclass
class ShapSummary:
    names: list[str]
    mean_abs_phi: np.ndarray
    order: np.ndarray
    points: list[tuple[str, str, float, float, float]]

    def ranking(self) -> list[tuple[int, str, float]]:
        return [(r + 1, self.names[j], float(self.mean_abs_phi[j])) for r, j in enumerate(self.order)]

    def top(self, k: int) -> list[str]:
        return [self.names[j] for j in self.order[:k]]


def summarize(phi, X, names: Sequence[str], pass_ids: Optional[Sequence[str]] = None, top_k: int = 20) -> ShapSummary:
    """Mean |phi| ranking (ties keep column order) and per-point rows for a beeswarm of the top features.

    Each point row is ``(pass_id, feature, phi, value, value_percentile)``,
    with the percentile of the value within its column in [0, 1].
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if phi.shape[0] == 0:
        raise ValueError("summarize needs at least one attribution")
    if phi.shape != X.shape or phi.shape[1] != len(names):
        raise ValueError("phi, X and names disagree in shape")
    mean_abs = np.mean(np.abs(phi), axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    ids = list(pass_ids) if pass_ids is not None else [str(i) for i in range(len(phi))]
    n = phi.shape[0]
    points = []
    for j in order[:top_k]:
        col = X[:, j]
        pct = (rankdata(col) - 1.0) / (n - 1) if n > 1 else np.full(n, 0.5)
        for i in range(n):
            points.append((ids[i], names[j], float(phi[i, j]), float(col[i]), float(pct[i])))
    return ShapSummary(list(names), mean_abs, order, points)


def write_attributions(pass_ids: Sequence[str], phi, base_value: float, names: Sequence[str], path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pass_id", *names, "base_value"])
        b = fmt_float(base_value)
        for pid, row in zip(pass_ids, np.asarray(phi)):
            w.writerow([pid, *(fmt_float(v) for v in row), b])


def write_summary(summary: ShapSummary, path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "mean_abs_phi", "rank"])
        for rank, name, value in summary.ranking():
            w.writerow([name, fmt_float(value), rank])


def write_points(summary: ShapSummary, path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pass_id", "feature", "phi", "value", "value_percentile"])
        for pid, name, p, v, q in summary.points:
            w.writerow([pid, name, fmt_float(p), fmt_float(v), fmt_float(q)])


def read_summary(path) -> list[tuple[str, float, int]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [(r["feature"], float(r["mean_abs_phi"]), int(r["rank"])) for r in csv.DictReader(fh)]


__all__ = [
    "Attribution", "MissingCover", "ShapSummary", "explain", "explain_matrix", "expected_value", "summarize",
    "write_attributions", "write_summary", "write_points", "read_summary",
]
