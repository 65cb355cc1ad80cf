"""Readers and writers for the canonical tracking, event and match files.

File formats
------------
tracking CSV
    ``match_id,period,frame,timestamp_ms,side,player_id,x,y``; ``side`` is
    ``H``, ``A`` or ``B`` (ball, empty ``player_id``).
events JSONL
    one object per line with keys ``pass_id, match_id, t_ms, kind, team,
    passer_id, receiver_id, one_touch, success, ball_start, ball_end``.
    Non-pass on-ball actions (receptions, shots, ...) use the same keys.
matches CSV
    ``match_id,round,home,away,home_attack_dir_p1,crosses_conceded_home,
    crosses_conceded_away,shots_conceded_home,shots_conceded_away``.

Coordinates in all three files are raw: each team attacks in the direction
given by the match's first-half orientation, switched at half time.
"""
from __future__ import annotations

import bisect
import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from ._io import atomic_write
from .domain import (
    AWAY, HOME, LEFT, PASS_KINDS, RIGHT, PassEvent, PassKind, PlayerRecord, Position, TrackingFrame,
)

log = logging.getLogger(__name__)

TRACKING_COLUMNS = ["match_id", "period", "frame", "timestamp_ms", "side", "player_id", "x", "y"]
EVENT_KEYS = [
    "pass_id", "match_id", "t_ms", "kind", "team", "passer_id", "receiver_id",
    "one_touch", "success", "ball_start", "ball_end",
]
MATCH_COLUMNS = [
    "match_id", "round", "home", "away", "home_attack_dir_p1",
    "crosses_conceded_home", "crosses_conceded_away", "shots_conceded_home", "shots_conceded_away",
]
TRACKING_FILE = "tracking.csv"
EVENTS_FILE = "events.jsonl"
MATCHES_FILE = "matches.csv"

ON_BALL_KINDS = frozenset(
    {"receive", "touch", "shot", "cross", "dribble", "tackle", "interception", "clearance", "save"}
)
KNOWN_KINDS = PASS_KINDS | ON_BALL_KINDS

_SIDE_FROM_CODE = {"H": HOME, "A": AWAY, "home": HOME, "away": AWAY}
_SIDE_CODE = {HOME: "H", AWAY: "A"}
FRAME_MS = 40.0


class ParseError(ValueError):
    pass


@dataclass
class ReadReport:
    rows: int = 0
    skipped_rows: list = field(default_factory=list)  # (line, reason)
    dropped_frames: list = field(default_factory=list)  # (match_id, frame, reason)
    skipped_events: list = field(default_factory=list)  # (line, reason)
    excluded_missing_ball: int = 0
    unaligned_passes: list = field(default_factory=list)

    def merge(self, other: "ReadReport") -> "ReadReport":
        for name in ("skipped_rows", "dropped_frames", "skipped_events", "unaligned_passes"):
            getattr(self, name).extend(getattr(other, name))
        self.rows += other.rows
        self.excluded_missing_ball += other.excluded_missing_ball
        return self

    def summary(self) -> dict:
        return {
            "tracking_rows": self.rows,
            "skipped_rows": len(self.skipped_rows),
            "dropped_frames": len(self.dropped_frames),
            "skipped_events": len(self.skipped_events),
            "excluded_missing_ball": self.excluded_missing_ball,
            "unaligned_passes": len(self.unaligned_passes),
        }


@dataclass(frozen=True)
class MatchInfo:
    match_id: str
    round: int
    home_team: str
    away_team: str
    home_attack_direction_p1: str
    crosses_conceded_home: int = 0
    crosses_conceded_away: int = 0
    shots_conceded_home: int = 0
    shots_conceded_away: int = 0

    def __post_init__(self):
        if self.round < 1:
            raise ValueError(f"match {self.match_id}: round must be >= 1")
        if self.home_attack_direction_p1 not in (LEFT, RIGHT):
            raise ValueError(f"match {self.match_id}: bad attack direction {self.home_attack_direction_p1!r}")
        for v in (self.crosses_conceded_home, self.crosses_conceded_away,
                  self.shots_conceded_home, self.shots_conceded_away):
            if v < 0:
                raise ValueError(f"match {self.match_id}: conceded counts must be >= 0")

    def team(self, side: str) -> str:
        return self.home_team if side == HOME else self.away_team

    def conceded(self, side: str) -> int:
        """Crosses plus shots conceded by ``side``."""
        if side == HOME:
            return self.crosses_conceded_home + self.shots_conceded_home
        return self.crosses_conceded_away + self.shots_conceded_away


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    match_id: str
    t_ms: int
    kind: str
    team: str
    player_id: str
    receiver_id: Optional[str] = None
    one_touch: bool = False
    success: bool = True
    ball_start: Optional[Position] = None
    ball_end: Optional[Position] = None

    @property
    def is_pass(self) -> bool:
        return self.kind in PASS_KINDS

    def to_json(self) -> str:
        def pos(p):
            return None if p is None else [p.x, p.y]

        obj = {
            "pass_id": self.event_id, "match_id": self.match_id, "t_ms": self.t_ms,
            "kind": self.kind, "team": _SIDE_CODE[self.team], "passer_id": self.player_id,
            "receiver_id": self.receiver_id, "one_touch": self.one_touch, "success": self.success,
            "ball_start": pos(self.ball_start), "ball_end": pos(self.ball_end),
        }
        return json.dumps(obj, separators=(",", ":"))

    def to_pass(self) -> PassEvent:
        return PassEvent(
            pass_id=self.event_id, match_id=self.match_id, t_ms=self.t_ms, passer_id=self.player_id,
            team_in_possession=self.team, kind=PassKind(self.kind), one_touch=self.one_touch,
            success=self.success, ball_start=self.ball_start, ball_end=self.ball_end,
            receiver_id=self.receiver_id,
        )


@dataclass(eq=False)
class MatchFrames:
    """Columnar tracking store for one match.

    Frame ``i`` owns player rows ``offsets[i]:offsets[i + 1]``; ``side`` is 0
    for home and 1 for away.
    """

    match_id: str
    frame_index: np.ndarray
    period: np.ndarray
    timestamp_ms: np.ndarray
    ball: np.ndarray
    offsets: np.ndarray
    side: np.ndarray
    player_id: np.ndarray
    xy: np.ndarray

    def __len__(self) -> int:
        return len(self.frame_index)

    def locate(self, frame_index: int) -> Optional[int]:
        i = int(np.searchsorted(self.frame_index, frame_index))
        if i < len(self.frame_index) and self.frame_index[i] == frame_index:
            return i
        return None

    def nearest(self, t_ms: float) -> Optional[int]:
        """Position of the frame whose timestamp is closest to ``t_ms`` (earlier wins ties)."""
        n = len(self.timestamp_ms)
        if n == 0:
            return None
        i = int(np.searchsorted(self.timestamp_ms, t_ms))
        if i == 0:
            return 0
        if i == n:
            return n - 1
        return i - 1 if t_ms - self.timestamp_ms[i - 1] <= self.timestamp_ms[i] - t_ms else i

    def frame(self, pos: int) -> TrackingFrame:
        lo, hi = self.offsets[pos], self.offsets[pos + 1]
        players = tuple(
            PlayerRecord(HOME if s == 0 else AWAY, str(pid), Position(float(x), float(y)))
            for s, pid, (x, y) in zip(self.side[lo:hi], self.player_id[lo:hi], self.xy[lo:hi])
        )
        return TrackingFrame(
            match_id=self.match_id, period=int(self.period[pos]), frame_index=int(self.frame_index[pos]),
            timestamp_ms=int(self.timestamp_ms[pos]), players=players,
            ball=Position(float(self.ball[pos, 0]), float(self.ball[pos, 1])),
        )

    def rows(self, pos: int):
        lo, hi = self.offsets[pos], self.offsets[pos + 1]
        return self.side[lo:hi], self.player_id[lo:hi], self.xy[lo:hi]

    def window(self, pos: int, radius: int):
        """Contiguous frames within ``radius`` frame indices of frame ``pos`` in the same period.

        Returns ``(frames, keys, xy)`` where ``keys`` lists ``(side, player_id)``
        of players present at ``pos`` and ``xy`` is (T, P, 2) with NaN where a
        player is missing.
        """
        f0 = self.frame_index[pos]
        per = self.period[pos]
        lo = pos
        while lo > 0 and self.period[lo - 1] == per and f0 - self.frame_index[lo - 1] <= radius:
            lo -= 1
        hi = pos
        n = len(self.frame_index)
        while hi + 1 < n and self.period[hi + 1] == per and self.frame_index[hi + 1] - f0 <= radius:
            hi += 1
        side0, ids0, _ = self.rows(pos)
        keys = list(zip(side0.tolist(), ids0.tolist()))
        col = {k: j for j, k in enumerate(keys)}
        out = np.full((hi - lo + 1, len(keys), 2), np.nan)
        for t, p in enumerate(range(lo, hi + 1)):
            s, ids, xy = self.rows(p)
            if p != pos and len(ids) == len(keys) and np.array_equal(ids, ids0) and np.array_equal(s, side0):
                out[t] = xy
                continue
            for k, row in zip(zip(s.tolist(), ids.tolist()), xy):
                j = col.get(k)
                if j is not None:
                    out[t, j] = row
        return self.frame_index[lo : hi + 1].copy(), keys, out

    def equals(self, other: "MatchFrames") -> bool:
        if self.match_id != other.match_id:
            return False
        for name in ("frame_index", "period", "timestamp_ms", "ball", "offsets", "side", "player_id", "xy"):
            if not np.array_equal(getattr(self, name), getattr(other, name)):
                return False
        return True


class FrameStore:
    """Tracking frames per match plus the report of what was skipped while reading."""

    def __init__(self, matches: Optional[dict] = None, report: Optional[ReadReport] = None):
        self.matches: dict[str, MatchFrames] = dict(matches or {})
        self.report = report or ReadReport()

    def __getitem__(self, match_id: str) -> MatchFrames:
        return self.matches[match_id]

    def __contains__(self, match_id) -> bool:
        return match_id in self.matches

    def __iter__(self):
        return iter(self.matches)

    def __len__(self) -> int:
        return len(self.matches)

    @property
    def n_frames(self) -> int:
        return sum(len(m) for m in self.matches.values())

    def equals(self, other: "FrameStore") -> bool:
        return list(self.matches) == list(other.matches) and all(
            self.matches[k].equals(other.matches[k]) for k in self.matches
        )


def _numeric(df: pd.DataFrame, col: str) -> np.ndarray:
    s = df[col]
    if s.dtype == object:
        s = pd.to_numeric(s.replace("", np.nan), errors="coerce")
    return s.to_numpy(dtype=float)


def read_tracking(path) -> FrameStore:
    """Parse a tracking CSV into a :class:`FrameStore`.

    Rows with unparseable fields are skipped and reported by line number.
    Frames without exactly one ball row, or with more than 11 players on a
    side, are dropped and logged. A frame index that goes backwards within a
    match period raises :class:`ParseError`.
    """
    path = Path(path)
    report = ReadReport()
    if path.stat().st_size == 0:
        return FrameStore({}, report)
    df = pd.read_csv(
        path, dtype={"match_id": str, "side": str, "player_id": str},
        keep_default_na=False, float_precision="round_trip",
    )
    if list(df.columns) != TRACKING_COLUMNS:
        raise ParseError(f"{path}: tracking header must be {','.join(TRACKING_COLUMNS)}, got {','.join(df.columns)}")
    report.rows = len(df)
    if len(df) == 0:
        return FrameStore({}, report)

    bad = np.zeros(len(df), dtype=bool)
    reasons = np.full(len(df), "", dtype=object)
    cols = {}
    for col in ("period", "frame", "timestamp_ms", "x", "y"):
        v = _numeric(df, col)
        nonnum = ~np.isfinite(v)
        if col in ("period", "frame", "timestamp_ms"):
            nonnum |= np.isfinite(v) & (v != np.round(v))
        reasons[nonnum & ~bad] = f"non-numeric {col}"
        bad |= nonnum
        cols[col] = v
    side = df["side"].to_numpy(dtype=object)
    pid = df["player_id"].to_numpy(dtype=object)
    bad_side = ~np.isin(side, ["H", "A", "B"])
    reasons[bad_side & ~bad] = "unknown side"
    bad |= bad_side
    bad_period = ~bad & ~np.isin(cols["period"], [1, 2])
    reasons[bad_period] = "period must be 1 or 2"
    bad |= bad_period
    no_id = ~bad & (side != "B") & (pid == "")
    reasons[no_id] = "missing player_id"
    bad |= no_id
    for i in np.flatnonzero(bad):
        report.skipped_rows.append((int(i) + 2, reasons[i]))
        log.warning("%s:%d: skipped tracking row (%s)", path, i + 2, reasons[i])

    keep = ~bad
    line = np.flatnonzero(keep) + 2
    match = df["match_id"].to_numpy(dtype=object)[keep]
    period = cols["period"][keep].astype(np.int64)
    frame = cols["frame"][keep].astype(np.int64)
    ts = cols["timestamp_ms"][keep].astype(np.int64)
    side = side[keep]
    pid = pid[keep]
    x = cols["x"][keep]
    y = cols["y"][keep]
    if len(match) == 0:
        return FrameStore({}, report)

    mcode, mnames = pd.factorize(match)
    grp = mcode * 2 + (period - 1)
    order = np.argsort(grp, kind="stable")
    g_sorted, f_sorted = grp[order], frame[order]
    same = g_sorted[1:] == g_sorted[:-1]
    back = np.flatnonzero(same & (f_sorted[1:] < f_sorted[:-1]))
    if len(back):
        i = order[back[0] + 1]
        raise ParseError(f"{path}:{line[i]}: non-monotonic frame index {frame[i]} in match {match[i]}")

    order = np.lexsort((frame, period, mcode))
    mcode, period, frame, ts = mcode[order], period[order], frame[order], ts[order]
    side, pid, x, y = side[order], pid[order], x[order], y[order]
    new = np.ones(len(frame), dtype=bool)
    new[1:] = (mcode[1:] != mcode[:-1]) | (period[1:] != period[:-1]) | (frame[1:] != frame[:-1])
    gid = np.cumsum(new) - 1
    starts = np.flatnonzero(new)
    n_groups = len(starts)
    is_ball = side == "B"
    n_ball = np.bincount(gid[is_ball], minlength=n_groups)
    n_home = np.bincount(gid[side == "H"], minlength=n_groups)
    n_away = np.bincount(gid[side == "A"], minlength=n_groups)
    g_match, g_period, g_frame, g_ts = mcode[starts], period[starts], frame[starts], ts[starts]

    for m in range(len(mnames)):
        fr = g_frame[g_match == m]
        if np.any(np.diff(fr) <= 0):
            raise ParseError(f"{path}: frame indices reused across periods in match {mnames[m]}")

    valid = (n_ball == 1) & (n_home <= 11) & (n_away <= 11)
    for g in np.flatnonzero(~valid):
        reason = "missing ball" if n_ball[g] == 0 else "duplicate ball" if n_ball[g] > 1 else "more than 11 players"
        report.dropped_frames.append((str(mnames[g_match[g]]), int(g_frame[g]), reason))
        log.warning("%s: dropped frame %s/%d (%s)", path, mnames[g_match[g]], g_frame[g], reason)

    ball_rows = np.flatnonzero(is_ball)
    ball_xy = np.full((n_groups, 2), np.nan)
    ball_xy[gid[ball_rows[::-1]]] = np.c_[x, y][ball_rows[::-1]]

    row_ok = valid[gid] & ~is_ball
    matches = {}
    for m, name in enumerate(mnames):
        gsel = np.flatnonzero(valid & (g_match == m))
        if len(gsel) == 0:
            continue
        rsel = np.flatnonzero(row_ok & (mcode == m))
        counts = np.bincount(gid[rsel], minlength=n_groups)[gsel]
        offsets = np.zeros(len(gsel) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(counts)
        matches[str(name)] = MatchFrames(
            match_id=str(name),
            frame_index=g_frame[gsel].astype(np.int64),
            period=g_period[gsel].astype(np.int8),
            timestamp_ms=g_ts[gsel].astype(np.int64),
            ball=ball_xy[gsel],
            offsets=offsets,
            side=np.where(side[rsel] == "H", 0, 1).astype(np.int8),
            player_id=pid[rsel].astype(object),
            xy=np.c_[x[rsel], y[rsel]],
        )
    return FrameStore(matches, report)


def tracking_frame_table(store: FrameStore) -> pd.DataFrame:
    """All frames as one long table in canonical order: per frame the ball row, then players."""
    parts = []
    for mf in store.matches.values():
        F = len(mf)
        R = len(mf.player_id)
        counts = np.diff(mf.offsets)
        frame_of_row = np.repeat(np.arange(F), counts)
        total = F + R
        ball_at = mf.offsets[:-1] + np.arange(F)
        player_at = np.arange(R) + frame_of_row + 1
        fidx = np.empty(total, dtype=np.int64)
        per = np.empty(total, dtype=np.int64)
        ts = np.empty(total, dtype=np.int64)
        sd = np.empty(total, dtype=object)
        ids = np.empty(total, dtype=object)
        xs = np.empty(total)
        ys = np.empty(total)
        fidx[ball_at], fidx[player_at] = mf.frame_index, mf.frame_index[frame_of_row]
        per[ball_at], per[player_at] = mf.period, mf.period[frame_of_row]
        ts[ball_at], ts[player_at] = mf.timestamp_ms, mf.timestamp_ms[frame_of_row]
        sd[ball_at], sd[player_at] = "B", np.where(mf.side == 0, "H", "A")
        ids[ball_at], ids[player_at] = "", mf.player_id
        xs[ball_at], xs[player_at] = mf.ball[:, 0], mf.xy[:, 0]
        ys[ball_at], ys[player_at] = mf.ball[:, 1], mf.xy[:, 1]
        parts.append(pd.DataFrame({
            "match_id": mf.match_id, "period": per, "frame": fidx, "timestamp_ms": ts,
            "side": sd, "player_id": ids, "x": xs, "y": ys,
        }))
    if not parts:
        return pd.DataFrame(columns=TRACKING_COLUMNS)
    return pd.concat(parts, ignore_index=True)


def write_tracking(store: FrameStore, path) -> None:
    table = tracking_frame_table(store)
    with atomic_write(path) as fh:
        table.to_csv(fh, index=False, lineterminator="\n")


def _position(value, what: str) -> Optional[Position]:
    if value is None:
        return None
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ValueError(f"{what} must be [x, y]")
    x, y = float(value[0]), float(value[1])
    if not (np.isfinite(x) and np.isfinite(y)):
        return None
    return Position(x, y)


def _parse_event(obj: dict) -> EventRecord:
    missing = [k for k in EVENT_KEYS if k not in obj]
    if missing:
        raise ValueError(f"missing keys {missing}")
    team = _SIDE_FROM_CODE.get(obj["team"])
    if team is None:
        raise ValueError(f"unknown team {obj['team']!r}")
    t = obj["t_ms"]
    if isinstance(t, bool) or not isinstance(t, (int, float)) or t != int(t):
        raise ValueError(f"bad t_ms {t!r}")
    return EventRecord(
        event_id=str(obj["pass_id"]), match_id=str(obj["match_id"]), t_ms=int(t), kind=str(obj["kind"]),
        team=team, player_id=str(obj["passer_id"]),
        receiver_id=None if obj["receiver_id"] in (None, "") else str(obj["receiver_id"]),
        one_touch=bool(obj["one_touch"]), success=bool(obj["success"]),
        ball_start=_position(obj["ball_start"], "ball_start"), ball_end=_position(obj["ball_end"], "ball_end"),
    )


def read_event_records(path, report: Optional[ReadReport] = None) -> list[EventRecord]:
    """All retained on-ball events, including passes, in file order.

    Unknown kinds and malformed lines are skipped with a warning; passes
    without a ball start position are excluded and counted.
    """
    report = report if report is not None else ReadReport()
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = _parse_event(json.loads(raw))
            except (ValueError, TypeError) as exc:
                report.skipped_events.append((lineno, str(exc)))
                log.warning("%s:%d: skipped event (%s)", path, lineno, exc)
                continue
            if rec.kind not in KNOWN_KINDS:
                report.skipped_events.append((lineno, f"unknown kind {rec.kind!r}"))
                log.warning("%s:%d: skipped event of unknown kind %r", path, lineno, rec.kind)
                continue
            out.append(rec)
    return retain_records(out, report)


def retain_records(records: Iterable[EventRecord], report: Optional[ReadReport] = None) -> list[EventRecord]:
    """Drop passes without a ball start position, counting them in ``report``."""
    out = []
    for rec in records:
        if rec.is_pass and rec.ball_start is None:
            if report is not None:
                report.excluded_missing_ball += 1
            continue
        out.append(rec)
    return out


def read_events(path, report: Optional[ReadReport] = None) -> list[PassEvent]:
    """Pass actions only (home pass, away pass, through pass, flick-on), not yet aligned to tracking."""
    return [r.to_pass() for r in read_event_records(path, report) if r.is_pass]


def write_events(records: Iterable[EventRecord], path) -> None:
    with atomic_write(path) as fh:
        for r in records:
            fh.write(r.to_json())
            fh.write("\n")


def read_matches(path) -> list[MatchInfo]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MATCH_COLUMNS:
            raise ParseError(f"{path}: matches header must be {','.join(MATCH_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(MatchInfo(
                    match_id=row["match_id"], round=int(row["round"]), home_team=row["home"],
                    away_team=row["away"], home_attack_direction_p1=row["home_attack_dir_p1"],
                    crosses_conceded_home=int(row["crosses_conceded_home"]),
                    crosses_conceded_away=int(row["crosses_conceded_away"]),
                    shots_conceded_home=int(row["shots_conceded_home"]),
                    shots_conceded_away=int(row["shots_conceded_away"]),
                ))
            except (ValueError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_matches(matches: Iterable[MatchInfo], path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MATCH_COLUMNS)
        for m in matches:
            w.writerow([
                m.match_id, m.round, m.home_team, m.away_team, m.home_attack_direction_p1,
                m.crosses_conceded_home, m.crosses_conceded_away, m.shots_conceded_home, m.shots_conceded_away,
            ])


def resolve_reception(pass_event: PassEvent, events: list[EventRecord], frames: MatchFrames) -> PassEvent:
    """Set ``reception_frame`` from the receiving team's next on-ball event.

    ``events`` are the match's records in time order. Unsuccessful passes are
    returned unchanged. When the team does not touch the ball again in the
    same period the reception stays absent.
    """
    if not pass_event.success or pass_event.release_frame is None:
        return pass_event
    rel = frames.locate(pass_event.release_frame)
    if rel is None:
        return pass_event
    period = frames.period[rel]
    start = bisect.bisect_right(events, pass_event.t_ms, key=lambda e: e.t_ms)
    for ev in events[start:]:
        if ev.team != pass_event.team_in_possession:
            continue
        pos = frames.nearest(ev.t_ms)
        if pos is None or frames.period[pos] != period:
            break
        fr = int(frames.frame_index[pos])
        if fr <= pass_event.release_frame:
            continue
        return replace(pass_event, reception_frame=fr)
    return pass_event


def align_passes(
    records: list[EventRecord], frames: Optional[MatchFrames], report: Optional[ReadReport] = None
) -> list[PassEvent]:
    """Attach release and reception frames to the pass records of one match.

    A pass whose timestamp is more than one frame away from any tracking
    frame is dropped and reported as unaligned.
    """
    records = sorted(records, key=lambda r: (r.t_ms, r.event_id))
    out = []
    for rec in records:
        if not rec.is_pass:
            continue
        p = rec.to_pass()
        pos = frames.nearest(rec.t_ms) if frames is not None else None
        if pos is None or abs(frames.timestamp_ms[pos] - rec.t_ms) > FRAME_MS:
            if report is not None:
                report.unaligned_passes.append(rec.event_id)
            continue
        p = replace(p, release_frame=int(frames.frame_index[pos]))
        out.append(resolve_reception(p, records, frames))
    return out


@dataclass(eq=False)
class Dataset:
    matches: dict
    frames: FrameStore
    events: dict
    passes: dict
    report: ReadReport = field(default_factory=ReadReport)

    def all_passes(self) -> list[PassEvent]:
        return [p for m in self.matches for p in self.passes.get(m, [])]

    def equals(self, other: "Dataset") -> bool:
        return (
            list(self.matches.values()) == list(other.matches.values())
            and self.frames.equals(other.frames)
            and self.events == other.events
            and self.passes == other.passes
        )


def build_dataset(matches: list[MatchInfo], frames: FrameStore, records: list[EventRecord],
                  report: Optional[ReadReport] = None) -> Dataset:
    report = report if report is not None else ReadReport()
    mdict = {m.match_id: m for m in matches}
    events: dict[str, list[EventRecord]] = {m: [] for m in mdict}
    for r in records:
        if r.match_id not in mdict:
            report.skipped_events.append((0, f"event {r.event_id} for unknown match {r.match_id}"))
            continue
        events[r.match_id].append(r)
    for m in events:
        events[m].sort(key=lambda r: (r.t_ms, r.event_id))
    passes = {m: align_passes(events[m], frames.matches.get(m), report) for m in mdict}
    return Dataset(mdict, frames, events, passes, report)


def load_dataset(directory) -> Dataset:
    """Read ``tracking.csv``, ``events.jsonl`` and ``matches.csv`` from a directory."""
    d = Path(directory)
    for name in (TRACKING_FILE, EVENTS_FILE, MATCHES_FILE):
        if not (d / name).is_file():
            raise FileNotFoundError(f"{d / name} not found")
    matches = read_matches(d / MATCHES_FILE)
    frames = read_tracking(d / TRACKING_FILE)
    report = ReadReport().merge(frames.report)
    records = read_event_records(d / EVENTS_FILE, report)
    return build_dataset(matches, frames, records, report)


def write_dataset(ds: Dataset, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matches(ds.matches.values(), d / MATCHES_FILE)
    write_tracking(ds.frames, d / TRACKING_FILE)
    write_events((r for m in ds.matches for r in ds.events.get(m, [])), d / EVENTS_FILE)
