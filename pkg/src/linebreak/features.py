"""The 189-dimension release-frame representation of a pass.

Column order (locked by ``feature_schema.txt``):

* 13 pass-level scalars, from ``Start Ball X`` to ``Defense_Lines_xDiff``;
* seven per-player blocks (x, y, vx, vy, ax, ay, area), each listing
  o_1..o_11 then d_1..d_11;
* ``Defense_Line_o_i_x`` and ``Defense_Line_o_i_y`` for i = 1..11, measured
  from the line defender d_10 to each attacker.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write
from .domain import (
    HOME, LabeledPass, OrderedSquads, PassEvent, PassKind, Pitch, PlayerSlot, Position,
    SquadIncomplete, attack_direction, other_side, player_sort_key,
)
from .geometry import defensive_line, line_gaps, nearest_defender_distance, voronoi_areas
from .ingest import Dataset, MatchFrames, MatchInfo
from .kinematics import estimate_kinematics_batch
from .labeler import normalize_pass

SQUAD = 11
KINEMATIC_RADIUS = 4
FORWARD_MAX_DEG = 60.0
BACKWARD_MIN_DEG = 120.0

SCALAR_FEATURES = [
    "Start Ball X", "Start Ball Y", "Through Pass", "Flick On", "Direct Pass", "Pass Direction",
    "Passer_Nearest_Defender_Distance", "Line Gap1", "Line Gap2", "Line Gap3",
    "Defense_Line_Ball_xDiff", "Offense_Line_Ball_xDiff", "Defense_Lines_xDiff",
]
PLAYER_QUANTITIES = ["x", "y", "vx", "vy", "ax", "ay", "area"]


def _build_schema() -> list[str]:
    names = list(SCALAR_FEATURES)
    for q in PLAYER_QUANTITIES:
        names += [f"o_{i}_{q}" for i in range(1, SQUAD + 1)]
        names += [f"d_{i}_{q}" for i in range(1, SQUAD + 1)]
    names += [f"Defense_Line_o_{i}_x" for i in range(1, SQUAD + 1)]
    names += [f"Defense_Line_o_{i}_y" for i in range(1, SQUAD + 1)]
    return names


FEATURE_NAMES = _build_schema()
N_FEATURES = len(FEATURE_NAMES)
SCHEMA_FILE = "feature_schema.txt"


class SchemaDrift(RuntimeError):
    pass


def load_schema() -> list[str]:
    text = resources.files("linebreak").joinpath(SCHEMA_FILE).read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line]


def check_schema(names: Sequence[str] = FEATURE_NAMES) -> None:
    """Raise :class:`SchemaDrift` naming the first column that differs from the golden file."""
    golden = load_schema()
    for i, (a, b) in enumerate(zip(names, golden)):
        if a != b:
            raise SchemaDrift(f"feature column {i} is {a!r}, schema file says {b!r}")
    if len(names) != len(golden):
        raise SchemaDrift(f"{len(names)} feature columns, schema file lists {len(golden)}")


@dataclass(frozen=True)
class FeatureVector:
    pass_id: str
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise SchemaDrift(f"pass {self.pass_id}: {self.values.shape} values, expected {N_FEATURES}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


def pass_direction(start: Position, end: Position) -> int:
    """+1 forward (|angle| < 60 deg), -1 backward (> 120 deg), 0 lateral, angle from atan2(dy, dx)."""
    theta = abs(math.degrees(math.atan2(end.y - start.y, end.x - start.x)))
    if theta < FORWARD_MAX_DEG:
        return 1
    if theta > BACKWARD_MIN_DEG:
        return -1
    return 0


def extract_features(
    pass_event: PassEvent,
    squads: OrderedSquads,
    pass_end: Optional[Position] = None,
    passer_position: Optional[Position] = None,
) -> FeatureVector:
    """Feature vector of a standardised pass from both squads at the release frame.

    ``pass_end`` defaults to the event's ``ball_end``; ``passer_position`` to
    the passer's tracked slot, falling back to the ball start.
    """
    if len(squads.offense) != SQUAD or len(squads.defense) != SQUAD:
        side = "offense" if len(squads.offense) != SQUAD else "defense"
        n = len(squads.offense) if side == "offense" else len(squads.defense)
        raise SquadIncomplete(side, n, SQUAD, pass_event.release_frame)
    ball = pass_event.ball_start
    end = pass_end if pass_end is not None else pass_event.ball_end
    if end is None:
        raise ValueError(f"pass {pass_event.pass_id}: no end position to derive the pass direction")
    if passer_position is None:
        idx = squads.offense_index(pass_event.passer_id)
        passer_position = squads.o(idx).position if idx is not None else ball

    off, dfn = squads.offense, squads.defense
    off_x = np.array([s.position.x for s in off])
    off_y = np.array([s.position.y for s in off])
    def_line = defensive_line([s.position.x for s in dfn], own_goal=+1).line_x
    off_line = defensive_line(off_x.tolist(), own_goal=-1).line_x
    gaps = line_gaps(squads)
    ref = dfn[SQUAD - 2].position

    scalars = [
        ball.x, ball.y,
        float(pass_event.kind == PassKind.THROUGH_PASS),
        float(pass_event.kind == PassKind.FLICK_ON),
        float(pass_event.one_touch),
        float(pass_direction(ball, end)),
        nearest_defender_distance(passer_position, [s.position for s in dfn]),
        *gaps,
        def_line - ball.x,
        ball.x - off_line,
        def_line - off_line,
    ]
    slots = off + dfn
    blocks = [
        [s.position.x for s in slots], [s.position.y for s in slots],
        [s.velocity[0] for s in slots], [s.velocity[1] for s in slots],
        [s.acceleration[0] for s in slots], [s.acceleration[1] for s in slots],
        [s.voronoi_area for s in slots],
    ]
    values = np.concatenate([
        np.asarray(scalars, dtype=float),
        np.asarray(blocks, dtype=float).ravel(),
        ref.x - off_x,
        ref.y - off_y,
    ])
    return FeatureVector(pass_event.pass_id, values)


def _kinematics(frames_idx, xy, at_frame):
    """Per-player velocity/acceleration at ``at_frame``; players with holes use their own samples."""
    n = xy.shape[1]
    vel = np.zeros((n, 2))
    acc = np.zeros((n, 2))
    complete = ~np.any(np.isnan(xy), axis=(0, 2))
    if np.any(complete) and len(frames_idx) >= 2:
        v, a, _, _ = estimate_kinematics_batch(xy[:, complete], frames_idx, at_frame)
        vel[complete], acc[complete] = v, a
    for j in np.flatnonzero(~complete):
        ok = ~np.isnan(xy[:, j, 0])
        if ok.sum() >= 2:
            v, a, _, _ = estimate_kinematics_batch(xy[ok, j][:, None, :], frames_idx[ok], at_frame)
            vel[j], acc[j] = v[0], a[0]
    return vel, acc


def release_squads(
    frames: MatchFrames, match: MatchInfo, possession: str, frame_index: int, pitch: Pitch = Pitch()
) -> OrderedSquads:
    """Standardised, ordered squads at ``frame_index`` with kinematics and Voronoi areas filled in."""
    pos = frames.locate(frame_index)
    if pos is None:
        raise LookupError(f"frame {frame_index} not in match {frames.match_id}")
    fidx, keys, xy = frames.window(pos, KINEMATIC_RADIUS)
    direction = attack_direction(match.home_attack_direction_p1, possession, int(frames.period[pos]))
    if direction == "left":
        xy = np.stack([pitch.length_m - xy[..., 0], pitch.width_m - xy[..., 1]], axis=-1)
    off_code = 0 if possession == HOME else 1
    sides = np.array([k[0] for k in keys])
    for code, side in ((off_code, possession), (1 - off_code, other_side(possession))):
        n = int(np.sum(sides == code))
        if n != SQUAD:
            raise SquadIncomplete(side, n, SQUAD, frame_index)
    t0 = int(np.flatnonzero(fidx == frame_index)[0])
    now = xy[t0]
    vel, acc = _kinematics(fidx, xy, frame_index)
    areas = voronoi_areas(now, pitch)
    slots = [
        PlayerSlot(str(k[1]), Position(float(now[j, 0]), float(now[j, 1])),
                   (float(vel[j, 0]), float(vel[j, 1])), (float(acc[j, 0]), float(acc[j, 1])), float(areas[j]))
        for j, k in enumerate(keys)
    ]
    off = [s for s, c in zip(slots, sides) if c == off_code]
    dfn = [s for s, c in zip(slots, sides) if c != off_code]
    off.sort(key=lambda s: (-s.position.x, player_sort_key(s.player_id)))
    dfn.sort(key=lambda s: (s.position.x, player_sort_key(s.player_id)))
    return OrderedSquads(tuple(off), tuple(dfn))


@dataclass
class FeatureMatrix:
    pass_ids: list[str]
    match_ids: list[str]
    values: np.ndarray
    labels: np.ndarray
    names: tuple[str, ...] = tuple(FEATURE_NAMES)

    def __len__(self) -> int:
        return len(self.pass_ids)

    def subset(self, mask) -> "FeatureMatrix":
        idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask)
        return FeatureMatrix(
            [self.pass_ids[i] for i in idx], [self.match_ids[i] for i in idx],
            self.values[idx], self.labels[idx], self.names,
        )


def _pass_end(p: PassEvent, frames: MatchFrames, direction: str, pitch: Pitch) -> Optional[Position]:
    if p.ball_end is not None:
        return p.ball_end
    if p.reception_frame is None:
        return None
    pos = frames.locate(p.reception_frame)
    if pos is None:
        return None
    b = Position(float(frames.ball[pos, 0]), float(frames.ball[pos, 1]))
    return b if direction == "right" else b.mirrored(pitch)


def featurize_match(
    labeled: Sequence[LabeledPass], frames: MatchFrames, match: MatchInfo, pitch: Pitch = Pitch()
) -> list[tuple[PassEvent, FeatureVector, int]]:
    out = []
    for lp in labeled:
        raw = lp.pass_event
        pos = frames.locate(raw.release_frame)
        if pos is None:
            continue
        direction = attack_direction(match.home_attack_direction_p1, raw.team_in_possession, int(frames.period[pos]))
        p = normalize_pass(raw, direction, pitch)
        end = _pass_end(p, frames, direction, pitch)
        if end is None:
            continue
        try:
            squads = release_squads(frames, match, raw.team_in_possession, raw.release_frame, pitch)
        except SquadIncomplete:
            continue
        out.append((raw, extract_features(p, squads, pass_end=end), lp.label))
    return out


def featurize_dataset(
    labeled: Sequence[LabeledPass], dataset: Dataset, pitch: Pitch = Pitch(), jobs: int = 1
) -> FeatureMatrix:
    """One row per labeled pass, rows ordered by (match_id, release_frame, pass_id).

    ``jobs > 1`` spreads matches over threads; row order does not depend on it.
    """
    check_schema()
    by_match: dict[str, list[LabeledPass]] = {}
    for lp in labeled:
        by_match.setdefault(lp.pass_event.match_id, []).append(lp)
    mids = [m for m in sorted(by_match) if m in dataset.frames and m in dataset.matches]

    def work(mid):
        return featurize_match(by_match[mid], dataset.frames[mid], dataset.matches[mid], pitch)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(work, mids))
    else:
        results = [work(m) for m in mids]
    rows = [r for res in results for r in res]
    rows.sort(key=lambda r: (r[0].match_id, r[0].release_frame, r[0].pass_id))
    values = np.array([r[1].values for r in rows], dtype=float).reshape(len(rows), N_FEATURES)
    return FeatureMatrix(
        pass_ids=[r[0].pass_id for r in rows], match_ids=[r[0].match_id for r in rows],
        values=values, labels=np.array([r[2] for r in rows], dtype=np.int64),
    )


def _g6(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def write_features(fm: FeatureMatrix, path) -> None:
    """CSV with the 189 schema names, then ``label`` and ``pass_id``; values at 6 significant digits."""
    with atomic_write(path) as fh:
        fh.write(",".join(_quote(n) for n in fm.names) + ",label,pass_id\n")
        for i in range(len(fm)):
            fh.write(",".join(_g6(v) for v in fm.values[i].tolist()))
            fh.write(f",{int(fm.labels[i])},{fm.pass_ids[i]}\n")


def _quote(name: str) -> str:
    return f'"{name}"' if "," in name else name


def read_features(path) -> FeatureMatrix:
    """Inverse of :func:`write_features`; raises :class:`SchemaDrift` naming the first bad column."""
    import csv

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaDrift(f"{path}: empty features file") from None
        if header[-2:] != ["label", "pass_id"]:
            raise SchemaDrift(f"{path}: last columns must be label,pass_id")
        check_schema(header[:-2])
        ids, vals, labels = [], [], []
        for row in reader:
            if len(row) != N_FEATURES + 2:
                raise SchemaDrift(f"{path}: row {reader.line_num} has {len(row)} fields")
            vals.append([float(v) for v in row[:N_FEATURES]])
            labels.append(int(row[-2]))
            ids.append(row[-1])
    values = np.array(vals, dtype=float).reshape(len(ids), N_FEATURES)
    # the file carries no match ids; callers attach them from the event feed
    return FeatureMatrix(ids, [""] * len(ids), values, np.array(labels, dtype=np.int64))


__all__ = [
    "FEATURE_NAMES", "N_FEATURES", "FeatureVector", "FeatureMatrix", "SchemaDrift", "extract_features",
    "featurize_dataset", "release_squads", "pass_direction", "load_schema", "check_schema",
    "write_features", "read_features",
]
