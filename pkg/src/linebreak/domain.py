"""Core data model: pitch coordinates, tracking frames, passes and ordered squads.

Coordinates are metres. ``x`` runs along the touchline, ``y`` along the goal
line with its origin on a touchline, so a standard pitch spans
``[0, 105] x [0, 68]``. After normalisation the team in possession always
attacks towards ``+x``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional

HOME = "home"
AWAY = "away"
SIDES = (HOME, AWAY)

LEFT = "left"
RIGHT = "right"


def other_side(side: str) -> str:
    if side == HOME:
        return AWAY
    if side == AWAY:
        return HOME
    raise ValueError(f"unknown team side {side!r}; expected 'home' or 'away'")


class SquadIncomplete(ValueError):
    """A team does not have the required number of tracked players in a frame."""

    def __init__(self, side: str, count: int, expected: int, frame_index: Optional[int] = None):
        self.side = side
        self.count = count
        self.expected = expected
        self.frame_index = frame_index
        where = "" if frame_index is None else f" at frame {frame_index}"
        super().__init__(f"{side} has {count} tracked players{where}, expected {expected}")


@dataclass(frozen=True)
class Pitch:
    length_m: float = 105.0
    width_m: float = 68.0

    def __post_init__(self):
        if not (self.length_m > 0 and self.width_m > 0):
            raise ValueError(f"pitch dimensions must be positive, got {self.length_m} x {self.width_m}")

    @property
    def area(self) -> float:
        return self.length_m * self.width_m


@dataclass(frozen=True, slots=True)
class Position:
    x: float
    y: float

    def mirrored(self, pitch: Pitch) -> "Position":
        return Position(pitch.length_m - self.x, pitch.width_m - self.y)

    def clamped(self, pitch: Pitch) -> "Position":
        return Position(min(max(self.x, 0.0), pitch.length_m), min(max(self.y, 0.0), pitch.width_m))


@dataclass(frozen=True, slots=True)
class PlayerRecord:
    side: str
    player_id: str
    position: Position


@dataclass(frozen=True)
class TrackingFrame:
    """Positions of all tracked players and the ball at one 25 Hz tick."""

    match_id: str
    period: int
    frame_index: int
    timestamp_ms: int
    players: tuple[PlayerRecord, ...]
    ball: Position

    def __post_init__(self):
        if self.period not in (1, 2):
            raise ValueError(f"period must be 1 or 2, got {self.period}")
        for side in SIDES:
            n = sum(1 for p in self.players if p.side == side)
            if n > 11:
                raise ValueError(f"{side} has {n} players in frame {self.frame_index}")

    def team(self, side: str) -> list[PlayerRecord]:
        return [p for p in self.players if p.side == side]

    def player(self, player_id: str) -> Optional[PlayerRecord]:
        for p in self.players:
            if p.player_id == player_id:
                return p
        return None


class PassKind(str, Enum):
    HOME_PASS = "home_pass"
    AWAY_PASS = "away_pass"
    THROUGH_PASS = "through_pass"
    FLICK_ON = "flick_on"


PASS_KINDS = frozenset(k.value for k in PassKind)


@dataclass(frozen=True)
class PassEvent:
    """A pass action from the event feed.

    ``t_ms`` is the event timestamp on the match clock; ``release_frame`` and
    ``reception_frame`` are filled in once the event is aligned with tracking.
    """

    pass_id: str
    match_id: str
    t_ms: int
    passer_id: str
    team_in_possession: str
    kind: PassKind
    one_touch: bool
    success: bool
    ball_start: Position
    ball_end: Optional[Position] = None
    receiver_id: Optional[str] = None
    release_frame: Optional[int] = None
    reception_frame: Optional[int] = None

    def __post_init__(self):
        if self.team_in_possession not in SIDES:
            raise ValueError(f"pass {self.pass_id}: unknown team {self.team_in_possession!r}")
        if not isinstance(self.kind, PassKind):
            object.__setattr__(self, "kind", PassKind(self.kind))
        if (
            self.release_frame is not None
            and self.reception_frame is not None
            and not self.release_frame < self.reception_frame
        ):
            raise ValueError(
                f"pass {self.pass_id}: reception frame {self.reception_frame} "
                f"not after release frame {self.release_frame}"
            )


@dataclass(frozen=True, slots=True)
class PlayerSlot:
    player_id: str
    position: Position
    velocity: tuple[float, float] = (0.0, 0.0)
    acceleration: tuple[float, float] = (0.0, 0.0)
    voronoi_area: float = 0.0


@dataclass(frozen=True)
class OrderedSquads:
    """Both teams ordered by proximity to the goal the offense attacks (+x).

    ``offense[0]`` is o_1, the most advanced attacker. ``defense[0]`` is d_1,
    the defender furthest from their own goal; ``defense[-1]`` is d_11.
    """

    offense: tuple[PlayerSlot, ...]
    defense: tuple[PlayerSlot, ...]

    def o(self, i: int) -> PlayerSlot:
        return self.offense[i - 1]

    def d(self, i: int) -> PlayerSlot:
        return self.defense[i - 1]

    def offense_index(self, player_id: str) -> Optional[int]:
        for i, slot in enumerate(self.offense, start=1):
            if slot.player_id == player_id:
                return i
        return None


@dataclass(frozen=True)
class LabeledPass:
    pass_event: PassEvent
    label: int
    defensive_line_x_at_release: float = float("nan")
    defensive_line_x_at_reception: float = float("nan")
    receiver_x_at_release: float = float("nan")
    receiver_x_at_reception: float = float("nan")
    reason: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.label == 1 and not (self.pass_event.success and self.pass_event.reception_frame is not None):
            raise ValueError(f"pass {self.pass_event.pass_id}: positive label needs a successful, received pass")


def player_sort_key(player_id: str):
    """Natural ordering for ids so that "4" sorts before "10"."""
    if player_id.isdigit():
        return (0, int(player_id), player_id)
    return (1, 0, player_id)


def normalize_attack_direction(
    frame: TrackingFrame, possession: str, raw_direction: str, pitch: Pitch = Pitch()
) -> TrackingFrame:
    """Return ``frame`` with the team in possession attacking towards +x.

    ``raw_direction`` is the direction the possessing team attacks in the raw
    coordinates of this period. Flipping mirrors every point through the
    pitch centre, ``(x, y) -> (length - x, width - y)``.
    """
    if possession not in SIDES:
        raise ValueError(f"unknown possession team {possession!r}; expected 'home' or 'away'")
    if raw_direction == RIGHT:
        return frame
    if raw_direction != LEFT:
        raise ValueError(f"unknown attack direction {raw_direction!r}; expected 'left' or 'right'")
    players = tuple(replace(p, position=p.position.mirrored(pitch)) for p in frame.players)
    return replace(frame, players=players, ball=frame.ball.mirrored(pitch))


def _slot(record: PlayerRecord, kinematics, areas) -> PlayerSlot:
    k = kinematics.get(record.player_id) if kinematics is not None else None
    vel = (float(k.vx), float(k.vy)) if k is not None else (0.0, 0.0)
    acc = (float(k.ax), float(k.ay)) if k is not None else (0.0, 0.0)
    area = float(areas.get(record.player_id, 0.0)) if areas is not None else 0.0
    return PlayerSlot(record.player_id, record.position, vel, acc, area)


def order_squads(
    frame: TrackingFrame,
    possession: str,
    kinematics: Optional[Mapping[str, object]] = None,
    areas: Optional[Mapping[str, float]] = None,
    squad_size: Optional[int] = 11,
) -> OrderedSquads:
    """Order both teams of a normalised frame into o_1..o_n and d_1..d_n.

    Offense is sorted by descending x, defense by ascending x, so that in both
    cases index 1 is furthest up the pitch towards the +x goal. Ties go to the
    smaller player id. ``kinematics`` maps player ids to objects with
    ``vx, vy, ax, ay`` attributes; ``areas`` maps player ids to Voronoi areas.

    Raises
    ------
    SquadIncomplete
        If either team does not have exactly ``squad_size`` players.
    """
    offense_side = possession
    defense_side = other_side(possession)
    off = frame.team(offense_side)
    dfn = frame.team(defense_side)
    if squad_size is not None:
        for side, members in ((offense_side, off), (defense_side, dfn)):
            if len(members) != squad_size:
                raise SquadIncomplete(side, len(members), squad_size, frame.frame_index)
    off = sorted(off, key=lambda p: (-p.position.x, player_sort_key(p.player_id)))
    dfn = sorted(dfn, key=lambda p: (p.position.x, player_sort_key(p.player_id)))
    return OrderedSquads(
        offense=tuple(_slot(p, kinematics, areas) for p in off),
        defense=tuple(_slot(p, kinematics, areas) for p in dfn),
    )


def attack_direction(home_direction_p1: str, side: str, period: int) -> str:
    """Raw attack direction of ``side`` in ``period`` given the home team's first-half direction."""
    if home_direction_p1 not in (LEFT, RIGHT):
        raise ValueError(f"unknown attack direction {home_direction_p1!r}")
    if side not in SIDES:
        raise ValueError(f"unknown team side {side!r}")
    flip = (side == AWAY) != (period == 2)
    if not flip:
        return home_direction_p1
    return LEFT if home_direction_p1 == RIGHT else RIGHT


def ids_multiset(squads: OrderedSquads) -> list[str]:
    return sorted([s.player_id for s in squads.offense] + [s.player_id for s in squads.defense])


__all__ = [
    "HOME", "AWAY", "SIDES", "LEFT", "RIGHT", "Pitch", "Position", "PlayerRecord",
    "TrackingFrame", "PassKind", "PASS_KINDS", "PassEvent", "PlayerSlot", "OrderedSquads",
    "LabeledPass", "SquadIncomplete", "normalize_attack_direction", "order_squads",
    "attack_direction", "other_side", "player_sort_key",
]
