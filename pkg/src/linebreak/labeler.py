"""Ground-truth Line Break labels.

A successful pass is a Line Break when, in coordinates where the passing
team attacks +x and with ``L`` the defending team's second-last player:

(a) the ball starts in front of the line at release,
(b) the receiver is in front of the line at release, and
(c) the receiver is beyond the line, re-evaluated at the reception frame.

"In front" and "beyond" are judged with a 0.1 m dead band on either side.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from ._io import atomic_write, fmt_float
from .domain import (
    LabeledPass, OrderedSquads, PassEvent, Pitch, SquadIncomplete, attack_direction,
    normalize_attack_direction, order_squads,
)
from .geometry import defensive_line
from .ingest import Dataset, MatchFrames, MatchInfo

EPSILON_M = 0.1
LABEL_COLUMNS = [
    "pass_id", "label", "line_x_release", "line_x_reception",
    "receiver_x_release", "receiver_x_reception", "reason",
]

BREAK = "line-break"
BALL_BEYOND = "ball-beyond-line"
RECEIVER_BEYOND = "receiver-beyond-line"
NOT_CROSSED = "not-crossed"
NO_RECEPTION = "no-reception"
RECEIVER_MISSING = "receiver-missing"
UNSUCCESSFUL = "unsuccessful"


@dataclass
class LabelSummary:
    passes: int = 0
    unsuccessful: int = 0
    skipped_incomplete: int = 0
    skipped_missing_frame: int = 0
    labeled: int = 0
    positives: int = 0
    no_reception: int = 0

    @property
    def positive_rate(self) -> float:
        return self.positives / self.labeled if self.labeled else 0.0

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["positive_rate"] = self.positive_rate
        return d


class MissingFrame(LookupError):
    pass


def normalize_pass(p: PassEvent, raw_direction: str, pitch: Pitch = Pitch()) -> PassEvent:
    """Event coordinates in the frame where the passing team attacks +x."""
    if raw_direction == "right":
        return p
    return replace(
        p,
        ball_start=p.ball_start.mirrored(pitch) if p.ball_start is not None else None,
        ball_end=p.ball_end.mirrored(pitch) if p.ball_end is not None else None,
    )


def squads_lookup(frames: MatchFrames, match: MatchInfo, possession: str,
                  pitch: Pitch = Pitch()) -> Callable[[int], OrderedSquads]:
    """``frame_index -> OrderedSquads`` in standardised coordinates for one possession."""

    def squads_at(frame_index: int) -> OrderedSquads:
        pos = frames.locate(frame_index)
        if pos is None:
            raise MissingFrame(f"frame {frame_index} not in match {frames.match_id}")
        frame = frames.frame(pos)
        direction = attack_direction(match.home_attack_direction_p1, possession, frame.period)
        return order_squads(normalize_attack_direction(frame, possession, direction, pitch), possession)

    return squads_at


def _receiver_x(squads: OrderedSquads, receiver_id: Optional[str]) -> Optional[float]:
    if receiver_id is None:
        return None
    i = squads.offense_index(receiver_id)
    return None if i is None else squads.o(i).position.x


def label_pass(
    pass_event: PassEvent,
    squads_at: Callable[[int], OrderedSquads],
    epsilon: float = EPSILON_M,
) -> LabeledPass:
    """Label one pass whose coordinates are already standardised.

    ``squads_at`` maps a frame index to both squads in standardised
    coordinates; it raises :class:`SquadIncomplete` when a team is short, which
    propagates so the caller can skip the pass.
    """
    nan = float("nan")
    if not pass_event.success:
        return LabeledPass(pass_event, 0, reason=UNSUCCESSFUL)
    release = squads_at(pass_event.release_frame)
    line_r = defensive_line([s.position.x for s in release.defense], own_goal=+1).line_x
    recv_r = _receiver_x(release, pass_event.receiver_id)
    if pass_event.reception_frame is None:
        return LabeledPass(pass_event, 0, line_r, nan, nan if recv_r is None else recv_r, nan, NO_RECEPTION)
    reception = squads_at(pass_event.reception_frame)
    line_c = defensive_line([s.position.x for s in reception.defense], own_goal=+1).line_x
    recv_c = _receiver_x(reception, pass_event.receiver_id)
    if recv_r is None or recv_c is None:
        return LabeledPass(
            pass_event, 0, line_r, line_c,
            nan if recv_r is None else recv_r, nan if recv_c is None else recv_c, RECEIVER_MISSING,
        )
    if not pass_event.ball_start.x < line_r - epsilon:
        reason = BALL_BEYOND
    elif not recv_r < line_r - epsilon:
        reason = RECEIVER_BEYOND
    elif not recv_c > line_c + epsilon:
        reason = NOT_CROSSED
    else:
        reason = BREAK
    return LabeledPass(pass_event, int(reason == BREAK), line_r, line_c, recv_r, recv_c, reason)


def label_match(
    passes: list[PassEvent], frames: Optional[MatchFrames], match: MatchInfo,
    pitch: Pitch = Pitch(), epsilon: float = EPSILON_M, summary: Optional[LabelSummary] = None,
) -> list[LabeledPass]:
    summary = summary if summary is not None else LabelSummary()
    out = []
    lookups = {}
    for p in passes:
        summary.passes += 1
        if not p.success:
            summary.unsuccessful += 1
            continue
        if frames is None:
            summary.skipped_missing_frame += 1
            continue
        if p.team_in_possession not in lookups:
            lookups[p.team_in_possession] = squads_lookup(frames, match, p.team_in_possession, pitch)
        pos = frames.locate(p.release_frame)
        if pos is None:
            summary.skipped_missing_frame += 1
            continue
        period = int(frames.period[pos])
        direction = attack_direction(match.home_attack_direction_p1, p.team_in_possession, period)
        try:
            lp = label_pass(normalize_pass(p, direction, pitch), lookups[p.team_in_possession], epsilon)
        except SquadIncomplete:
            summary.skipped_incomplete += 1
            continue
        except MissingFrame:
            summary.skipped_missing_frame += 1
            continue
        # keep the event as read; the diagnostics are in standardised coordinates
        lp = replace(lp, pass_event=p)
        summary.labeled += 1
        summary.positives += lp.label
        summary.no_reception += lp.reason == NO_RECEPTION
        out.append(lp)
    return out


def label_dataset(
    dataset: Dataset, pitch: Pitch = Pitch(), epsilon: float = EPSILON_M
) -> tuple[list[LabeledPass], LabelSummary]:
    """Label every successful pass action; output sorted by pass_id.

    Passes at frames where a team has fewer or more than 11 tracked players
    are skipped and counted in the summary.
    """
    summary = LabelSummary()
    labels = []
    for mid, match in dataset.matches.items():
        labels.extend(label_match(
            dataset.passes.get(mid, []), dataset.frames.matches.get(mid), match, pitch, epsilon, summary
        ))
    labels.sort(key=lambda lp: lp.pass_event.pass_id)
    return labels, summary


def _f(v: float) -> str:
    return "" if v is None or math.isnan(v) else fmt_float(v)


def write_labels(labels: list[LabeledPass], path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABEL_COLUMNS)
        for lp in labels:
            w.writerow([
                lp.pass_event.pass_id, lp.label, _f(lp.defensive_line_x_at_release),
                _f(lp.defensive_line_x_at_reception), _f(lp.receiver_x_at_release),
                _f(lp.receiver_x_at_reception), lp.reason,
            ])


def read_labels(path) -> dict[str, dict]:
    """``pass_id -> row`` with the label as int and the diagnostics as floats."""
    out = {}
    with open(Path(path), encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LABEL_COLUMNS:
            raise ValueError(f"{path}: labels header must be {','.join(LABEL_COLUMNS)}")
        for row in reader:
            rec = {"label": int(row["label"]), "reason": row["reason"]}
            for k in LABEL_COLUMNS[2:6]:
                rec[k] = float(row[k]) if row[k] else float("nan")
            out[row["pass_id"]] = rec
    return out


def attach_labels(dataset: Dataset, rows: dict[str, dict]) -> list[LabeledPass]:
    """Rebuild labeled passes from a labels file against the dataset it was made from."""
    by_id = {p.pass_id: p for p in dataset.all_passes()}
    out = []
    for pid in sorted(rows):
        p = by_id.get(pid)
        if p is None:
            raise ValueError(f"labels mention pass {pid!r}, which the dataset does not contain")
        r = rows[pid]
        out.append(LabeledPass(
            p, r["label"], r["line_x_release"], r["line_x_reception"],
            r["receiver_x_release"], r["receiver_x_reception"], r["reason"],
        ))
    return out
