"""Reference implementations written independently of the package internals."""
from __future__ import annotations

import numpy as np


def _raw_direction(home_dir_p1: str, possession: str, period: int) -> str:
    flip = (possession == "away") != (period == 2)
    if not flip:
        return home_dir_p1
    return "left" if home_dir_p1 == "right" else "right"


def _std_frame(mf, frame_index, possession, home_dir_p1, length):
    """Offense and defense as ``{player_id: x}`` with the possessing side attacking +x."""
    rows = np.flatnonzero(mf.frame_index == frame_index)
    if len(rows) != 1:
        return None
    r = rows[0]
    lo, hi = mf.offsets[r], mf.offsets[r + 1]
    mirror = _raw_direction(home_dir_p1, possession, int(mf.period[r])) == "left"
    code = 0 if possession == "home" else 1
    off, dfn = {}, {}
    for k in range(lo, hi):
        x = length - mf.xy[k, 0] if mirror else mf.xy[k, 0]
        (off if mf.side[k] == code else dfn)[mf.player_id[k]] = float(x)
    return off, dfn, mirror


def label_oracle(dataset, epsilon=0.1, length=105.0) -> dict[str, int]:
    """Labels for every successful pass whose frames have two full squads."""
    out = {}
    for p in dataset.all_passes():
        if not p.success or p.release_frame is None:
            continue
        match = dataset.matches[p.match_id]
        mf = dataset.frames.matches[p.match_id]
        rel = _std_frame(mf, p.release_frame, p.team_in_possession, match.home_attack_direction_p1, length)
        if rel is None or len(rel[0]) != 11 or len(rel[1]) != 11:
            continue
        if p.reception_frame is None:
            out[p.pass_id] = 0
            continue
        rec = _std_frame(mf, p.reception_frame, p.team_in_possession, match.home_attack_direction_p1, length)
        if rec is None or len(rec[0]) != 11 or len(rec[1]) != 11:
            continue
        line_r = sorted(rel[1].values())[-2]
        line_c = sorted(rec[1].values())[-2]
        ball_x = length - p.ball_start.x if rel[2] else p.ball_start.x
        recv_r = rel[0].get(p.receiver_id)
        recv_c = rec[0].get(p.receiver_id)
        ok = (recv_r is not None and recv_c is not None and ball_x < line_r - epsilon
              and recv_r < line_r - epsilon and recv_c > line_c + epsilon)
        out[p.pass_id] = int(ok)
    return out


def _conditional_value(tree, x, known, node=0):
    """Tree output with features outside ``known`` averaged out by training cover."""
    if tree.left[node] < 0:
        return tree.value[node]
    f = tree.feature[node]
    left, right = tree.left[node], tree.right[node]
    if f in known:
        v = x[f]
        go_left = tree.default_left[node] if np.isnan(v) else v < tree.threshold[node]
        return _conditional_value(tree, x, known, left if go_left else right)
    lv = _conditional_value(tree, x, known, left)
    rv = _conditional_value(tree, x, known, right)
    return (tree.cover[left] * lv + tree.cover[right] * rv) / tree.cover[node]


def brute_force_shapley(ensemble, x) -> np.ndarray:
    """Shapley values of the margin by enumerating every feature subset."""
    from itertools import combinations
    from math import factorial

    m = len(x)
    phi = np.zeros(m)
    for tree in ensemble.trees:
        for i in range(m):
            others = [j for j in range(m) if j != i]
            for k in range(m):
                w = factorial(k) * factorial(m - k - 1) / factorial(m)
                for subset in combinations(others, k):
                    s = set(subset)
                    phi[i] += w * (_conditional_value(tree, x, s | {i}) - _conditional_value(tree, x, s))
    return phi * ensemble.learning_rate
