from __future__ import annotations

import numpy as np
import pytest

from linebreak.domain import AWAY, HOME, PlayerRecord, Position, TrackingFrame
from linebreak.ingest import Dataset, EventRecord, FrameStore, MatchFrames, MatchInfo, build_dataset

PITCH_L, PITCH_W = 105.0, 68.0


def match_frames(match_id: str, frames) -> MatchFrames:
    """Columnar store from ``(frame_index, period, (bx, by), [(side, pid, x, y), ...])`` tuples."""
    fidx, period, ts, ball, offsets, side, pid, xy = [], [], [], [], [0], [], [], []
    for f, per, b, players in frames:
        fidx.append(f)
        period.append(per)
        ts.append(f * 40)
        ball.append(b)
        for s, p, x, y in players:
            side.append(0 if s == HOME else 1)
            pid.append(p)
            xy.append((x, y))
        offsets.append(len(pid))
    return MatchFrames(
        match_id, np.array(fidx, dtype=np.int64), np.array(period, dtype=np.int8), np.array(ts, dtype=np.int64),
        np.array(ball, dtype=float).reshape(-1, 2), np.array(offsets, dtype=np.int64),
        np.array(side, dtype=np.int8), np.array(pid, dtype=object), np.array(xy, dtype=float).reshape(-1, 2),
    )


def squad(side: str, xs, ys=None, prefix=None):
    prefix = prefix or ("h" if side == HOME else "a")
    ys = ys if ys is not None else np.linspace(5, 63, len(xs))
    return [(side, f"{prefix}{i + 1}", float(x), float(y)) for i, (x, y) in enumerate(zip(xs, ys))]


def flat_defense(line_x: float, gk_x: float = 100.0):
    """Away defenders: a goalkeeper deep, the line at ``line_x`` and the rest spread in front of it."""
    return [gk_x, line_x, line_x - 2, line_x - 4, line_x - 6, line_x - 15, line_x - 17, line_x - 19,
            line_x - 21, line_x - 30, line_x - 32]


def frame_players(off_xs, def_xs, offense=HOME):
    defense = AWAY if offense == HOME else HOME
    return squad(offense, off_xs) + squad(defense, def_xs)


def random_sites(rng, n=22):
    return np.c_[rng.uniform(0, PITCH_L, n), rng.uniform(0, PITCH_W, n)]


def tracking_frame(players, ball=(50.0, 34.0), frame_index=100, period=1) -> TrackingFrame:
    return TrackingFrame("M1", period, frame_index, frame_index * 40,
                         tuple(PlayerRecord(s, p, Position(x, y)) for s, p, x, y in players), Position(*ball))


def dataset_of(match: MatchInfo, frames: MatchFrames, records: list[EventRecord]) -> Dataset:
    return build_dataset([match], FrameStore({match.match_id: frames}), records)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
