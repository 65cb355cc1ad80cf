"""Seeded synthetic league with planted Line Breaks.

Every pass is scripted in standardised coordinates (possession attacks +x)
and then written in raw match coordinates. The defending team sets a back
four around a line height ``L``; two forwards wait just onside. A forward
pass becomes a planted break with a probability that rises with the speed of
the two most advanced attackers and with the gap between the line defender
and the fourth defender from the back. The intercept of that logistic is
calibrated so that the expected share of breaks among successful passes
matches ``target_positive_rate``.

Only short tracking blocks around each release and reception are written;
see :class:`SynthConfig` for the block sizes.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._io import atomic_write
from .domain import AWAY, HOME, LEFT, RIGHT, Pitch, Position, attack_direction
from .ingest import (
    EVENTS_FILE, Dataset, EventRecord, FrameStore, MatchFrames, MatchInfo, ReadReport, build_dataset,
    retain_records, write_dataset, write_events,
)

FPS = 25
FRAME_MS = 40
EVENT_TICK_MS = 1000.0 / 30.0
PERIOD2_START_MS = 2_700_000
PASS_SPACING_MS = 6000
SQUAD = 11
EPSILON = 0.1

# role slots inside each squad array
OFF_GK, OFF_DEF, OFF_MID, OFF_RUN = 0, (1, 2, 3), (4, 5, 6, 7, 8), (9, 10)
DEF_GK, DEF_BACK, DEF_MID, DEF_FWD = 0, (1, 2, 3, 4), (5, 6, 7), (8, 9, 10)

FORWARD, LATERAL, BACKWARD = 1, 0, -1
DIRECTION_P = (0.45, 0.30, 0.25)
BREAK_SCALE = 1.6
W_O1_VX, W_O2_VX, W_GAP3 = 0.75, 0.6, 0.42
HOLD_S = 0.2
MAX_RUN_ACCEL = 9.0
MAX_RUN_SPEED = 11.0
FLIGHT_GRID_FRAMES = np.arange(15, 51)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic league.

    ``line_height`` is the range of the line defender's x for a team with
    zero pressing; pressing raises it by up to ``pressing_line_shift`` metres and
    widens the gap behind the line. ``release_radius`` and ``reception_radius``
    are the half-widths, in frames, of the tracking blocks written around each
    release and reception.
    """

    seed: int = 7
    n_rounds: int = 5
    matches_per_round: int = 9
    passes_per_match: int = 433
    target_positive_rate: float = 0.015
    line_height: tuple[float, float] = (52.0, 80.0)
    pressing_line_shift: float = 8.0
    pressing: Optional[tuple[float, ...]] = None
    noise_sigma_m: float = 0.15
    unsuccessful_rate: float = 0.08
    missing_ball_rate: float = 0.005
    through_pass_rate: float = 0.08
    flick_on_rate: float = 0.03
    one_touch_rate: float = 0.25
    shot_rate: float = 0.03
    conceded_base: float = 2.0
    conceded_per_break: float = 3.0
    release_radius: int = 4
    reception_radius: int = 1
    pitch: Pitch = field(default_factory=Pitch)

    def __post_init__(self):
        if not 0.0 <= self.target_positive_rate < DIRECTION_P[0]:
            raise ValueError("target_positive_rate must lie in [0, 0.45)")
        if self.noise_sigma_m < 0:
            raise ValueError("noise_sigma_m must be >= 0")
        if self.n_rounds < 1 or self.matches_per_round < 1 or self.passes_per_match < 1:
            raise ValueError("rounds, matches and passes must be positive")
        if self.n_rounds > 2 * self.matches_per_round - 1:
            raise ValueError("a single round robin has at most 2*matches_per_round - 1 rounds")
        if self.release_radius < 2 or self.reception_radius < 0:
            raise ValueError("release_radius must be >= 2 and reception_radius >= 0")
        for r in (self.unsuccessful_rate, self.missing_ball_rate, self.through_pass_rate,
                  self.flick_on_rate, self.one_touch_rate, self.shot_rate):
            if not 0.0 <= r < 1.0:
                raise ValueError("rates must lie in [0, 1)")
        if self.pressing is not None and len(self.pressing) != self.n_teams:
            raise ValueError(f"pressing needs one value per team ({self.n_teams})")

    @property
    def n_teams(self) -> int:
        return 2 * self.matches_per_round


@dataclass
class SynthResult:
    dataset: Dataset
    truth: dict[str, int]
    pressing: dict[str, float]
    expected_breaks_conceded: dict[str, float]
    intercept: float
    records: list = field(default_factory=list)
    # planted break probability of each labelled pass, zero where no break was feasible
    break_probability: dict[str, float] = field(default_factory=dict)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class _Scenes:
    """Release geometry of ``n`` passes, standardised, noise free."""

    off_xy: np.ndarray
    off_v: np.ndarray
    def_xy: np.ndarray
    def_v: np.ndarray
    line: np.ndarray
    gaps: np.ndarray
    direction: np.ndarray
    margin: np.ndarray

    @property
    def n(self) -> int:
        return len(self.line)

    def leading_runners(self):
        """(o_1 vx, o_2 vx, slot of the faster runner) from the two forwards."""
        a, b = OFF_RUN
        first = np.where(self.off_xy[:, a, 0] >= self.off_xy[:, b, 0], a, b)
        second = a + b - first
        i = np.arange(self.n)
        vx1 = self.off_v[i, first, 0]
        vx2 = self.off_v[i, second, 0]
        faster = np.where(self.off_v[:, a, 0] >= self.off_v[:, b, 0], a, b)
        return vx1, vx2, faster


def _sample_scenes(rng: np.random.Generator, rho: np.ndarray, cfg: SynthConfig) -> _Scenes:
    n = len(rho)
    length, width = cfg.pitch.length_m, cfg.pitch.width_m
    lo, hi = cfg.line_height
    line = rng.uniform(lo, hi, n) + cfg.pressing_line_shift * rho
    line = np.minimum(line, length - 15.0)
    g1 = rng.uniform(0.3, 2.0, n)
    g2 = g1 + rng.uniform(0.3, 2.0, n)
    g3 = g2 + rng.uniform(0.05, 1.0, n) * (4.0 + 10.0 * rho)

    def_xy = np.empty((n, SQUAD, 2))
    def_xy[:, DEF_GK, 0] = rng.uniform(line + 3.0, length - 2.0)
    def_xy[:, DEF_GK, 1] = rng.uniform(28.0, 40.0, n)
    back_x = np.stack([line, line - g1, line - g2, line - g3], axis=1)
    lanes = np.array([12.0, 27.0, 41.0, 56.0]) + rng.normal(0.0, 3.0, (n, 4))
    perm = np.argsort(rng.random((n, 4)), axis=1)
    def_xy[:, DEF_BACK, 0] = back_x
    def_xy[:, DEF_BACK, 1] = np.take_along_axis(lanes, perm, axis=1)
    def_xy[:, DEF_MID, 0] = (line - g3)[:, None] - rng.uniform(3.0, 12.0, (n, 3))
    def_xy[:, DEF_FWD, 0] = (line - g3)[:, None] - rng.uniform(12.0, 35.0, (n, 3))
    def_xy[:, DEF_MID + DEF_FWD, 1] = rng.uniform(4.0, width - 4.0, (n, 6))
    def_xy[..., 0] = np.maximum(def_xy[..., 0], 5.0)
    def_v = np.empty((n, SQUAD, 2))
    def_v[:, DEF_GK] = rng.normal(0.0, 0.3, (n, 2))
    def_v[:, DEF_BACK, 0] = rng.uniform(-1.0, 1.0, (n, 4))
    def_v[:, DEF_MID + DEF_FWD, 0] = rng.uniform(-2.0, 1.0, (n, 6))
    def_v[:, 1:, 1] = rng.normal(0.0, 0.8, (n, 10))

    off_xy = np.empty((n, SQUAD, 2))
    off_v = np.empty((n, SQUAD, 2))
    off_xy[:, OFF_GK, 0] = rng.uniform(3.0, 15.0, n)
    off_xy[:, OFF_GK, 1] = rng.uniform(28.0, 40.0, n)
    off_v[:, OFF_GK] = rng.normal(0.0, 0.3, (n, 2))
    off_xy[:, OFF_DEF, 0] = np.maximum(line[:, None] - rng.uniform(25.0, 45.0, (n, 3)), 8.0)
    off_xy[:, OFF_MID, 0] = line[:, None] - rng.uniform(6.0, 25.0, (n, 5))
    delta = rng.uniform(0.7, 4.5, (n, 2))
    off_xy[:, OFF_RUN, 0] = line[:, None] - delta
    off_xy[:, 1:, 1] = rng.uniform(3.0, width - 3.0, (n, 10))
    off_v[:, OFF_DEF, 0] = rng.uniform(-1.0, 2.0, (n, 3))
    off_v[:, OFF_MID, 0] = rng.uniform(-1.0, 2.5, (n, 5))
    off_v[:, OFF_RUN[0], 0] = rng.uniform(-1.5, 8.0, n)
    off_v[:, OFF_RUN[1], 0] = rng.uniform(-1.5, 7.0, n)
    off_v[:, 1:, 1] = rng.normal(0.0, 1.0, (n, 10))

    direction = rng.choice(np.array([FORWARD, LATERAL, BACKWARD]), size=n, p=DIRECTION_P)
    margin = rng.uniform(0.7, 3.0, n)
    return _Scenes(off_xy, off_v, def_xy, def_v, line, np.stack([g1, g2, g3], axis=1), direction, margin)


def _positions_at(xy, v, t, pitch: Pitch):
    """Constant-velocity positions at time offsets ``t`` (broadcast), kept inside the pitch."""
    p = xy + v * t
    p[..., 0] = np.clip(p[..., 0], 0.5, pitch.length_m - 0.5)
    p[..., 1] = np.clip(p[..., 1], 0.5, pitch.width_m - 0.5)
    return p


def _second_largest(x: np.ndarray) -> np.ndarray:
    return np.sort(x, axis=-1)[..., -2]


def _break_plan(sc: _Scenes, runner: np.ndarray, u: np.ndarray, pitch: Pitch):
    """Flight time and acceleration of each runner's dash beyond the reception line.

    The runner keeps its release velocity for ``HOLD_S`` seconds and then
    accelerates uniformly so that at reception it stands ``margin`` metres
    plus the dead band past the line. Returns ``(feasible, flight_frames,
    accel, target_x)``; the flight time is drawn uniformly (via ``u``) from
    the feasible grid points.
    """
    i = np.arange(sc.n)
    x0 = sc.off_xy[i, runner, 0]
    v0 = sc.off_v[i, runner, 0]
    T = FLIGHT_GRID_FRAMES / FPS
    dx = _positions_at(sc.def_xy[:, None, :, :], sc.def_v[:, None, :, :], T[None, :, None, None], pitch)
    line_c = _second_largest(dx[..., 0])
    target = line_c + EPSILON + sc.margin[:, None]
    tau = T[None, :] - HOLD_S
    x1 = x0[:, None] + v0[:, None] * HOLD_S
    a = 2.0 * (target - x1 - v0[:, None] * tau) / tau**2
    ok = (np.abs(a) <= MAX_RUN_ACCEL) & (np.abs(v0[:, None] + a * tau) <= MAX_RUN_SPEED)
    ok &= target <= pitch.length_m - 1.0
    count = ok.sum(axis=1)
    pick = np.minimum((u * count).astype(int), np.maximum(count - 1, 0))
    rank = np.cumsum(ok, axis=1) - 1
    col = np.argmax(ok & (rank == pick[:, None]), axis=1)
    return count > 0, FLIGHT_GRID_FRAMES[col], a[i, col], target[i, col]


def _break_probability(sc: _Scenes, intercept: float) -> np.ndarray:
    vx1, vx2, _ = sc.leading_runners()
    z = BREAK_SCALE * (W_O1_VX * vx1 + W_O2_VX * vx2 + W_GAP3 * sc.gaps[:, 2]) + intercept
    return np.where(sc.direction == FORWARD, _sigmoid(z), 0.0)


@functools.lru_cache(maxsize=32)
def calibrate_intercept(target_rate: float, line_height=(52.0, 80.0), pressing_line_shift: float = 8.0,
                        n_samples: int = 40_000, seed: int = 20240101) -> float:
    """Intercept whose expected planted-break share among passes equals ``target_rate``.

    Solved by bisection on a fixed Monte Carlo sample of scenes with uniform
    pressing; the expectation includes runs that cannot be scripted.
    """
    if target_rate <= 0.0:
        return -math.inf
    cfg = SynthConfig(line_height=tuple(line_height), pressing_line_shift=pressing_line_shift,
                      target_positive_rate=target_rate)
    rng = np.random.default_rng(seed)
    sc = _sample_scenes(rng, rng.uniform(0.0, 1.0, n_samples), cfg)
    _, _, faster = sc.leading_runners()
    feasible, *_ = _break_plan(sc, faster, rng.random(n_samples), cfg.pitch)
    vx1, vx2, _ = sc.leading_runners()
    score = BREAK_SCALE * (W_O1_VX * vx1 + W_O2_VX * vx2 + W_GAP3 * sc.gaps[:, 2])
    weight = (sc.direction == FORWARD) & feasible

    def rate(b):
        return float(np.mean(np.where(weight, _sigmoid(score + b), 0.0)))

    lo, hi = -80.0, 20.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if rate(mid) < target_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def round_robin(n_teams: int, n_rounds: int) -> list[list[tuple[int, int]]]:
    """Circle-method schedule: ``n_rounds`` rounds of ``n_teams / 2`` (home, away) pairings."""
    if n_teams % 2:
        raise ValueError("round robin needs an even number of teams")
    teams = list(range(n_teams))
    rounds = []
    for r in range(n_rounds):
        pairs = []
        for k in range(n_teams // 2):
            a, b = teams[k], teams[n_teams - 1 - k]
            pairs.append((a, b) if (r + k) % 2 == 0 else (b, a))
        rounds.append(pairs)
        teams = [teams[0]] + [teams[-1]] + teams[1:-1]
    return rounds


def _event_ms(frame: np.ndarray) -> np.ndarray:
    """Timestamp on the 30 Hz event clock nearest to each tracking frame."""
    ticks = np.round(frame * FRAME_MS / EVENT_TICK_MS)
    return np.round(ticks * EVENT_TICK_MS).astype(np.int64)


def _place_passers(rng, sc: _Scenes, end: np.ndarray, passer: np.ndarray, pitch: Pitch) -> np.ndarray:
    """Passer positions behind/level/ahead of the pass end so the pass angle lands well inside its cone."""
    n = sc.n
    lo = np.select([sc.direction == FORWARD, sc.direction == LATERAL], [0.0, 70.0], 130.0)
    hi = np.select([sc.direction == FORWARD, sc.direction == LATERAL], [50.0, 110.0], 180.0)
    x_max = sc.line - 6.0
    out = np.empty((n, 2))
    todo = np.ones(n, dtype=bool)
    r_hi = np.full(n, 30.0)
    for _ in range(60):
        idx = np.flatnonzero(todo)
        if len(idx) == 0:
            break
        theta = np.radians(rng.uniform(lo[idx], hi[idx])) * rng.choice([-1.0, 1.0], len(idx))
        r = rng.uniform(6.0, np.maximum(r_hi[idx], 7.0))
        px = end[idx, 0] - r * np.cos(theta)
        py = end[idx, 1] - r * np.sin(theta)
        good = (px >= 3.0) & (px <= x_max[idx]) & (py >= 1.0) & (py <= pitch.width_m - 1.0)
        out[idx[good]] = np.c_[px, py][good]
        todo[idx[good]] = False
        r_hi[idx[~good]] *= 0.9
    if np.any(todo):
        idx = np.flatnonzero(todo)
        fallback = sc.off_xy[idx, passer[idx]]
        out[idx, 0] = np.clip(fallback[:, 0], 3.0, x_max[idx])
        out[idx, 1] = np.clip(fallback[:, 1], 1.0, pitch.width_m - 1.0)
    return out


@dataclass
class _MatchScript:
    frames: MatchFrames
    events: list
    truth: dict
    expected_breaks: dict
    break_probability: dict


def _script_match(cfg: SynthConfig, match: MatchInfo, match_no: int, rho_home: float, rho_away: float,
                  intercept: float, home_team: str, away_team: str) -> _MatchScript:
    rng = np.random.default_rng([cfg.seed, match_no])
    pitch = cfg.pitch
    n = cfg.passes_per_match
    possession_home = rng.random(n) < 0.5
    rho_def = np.where(possession_home, rho_away, rho_home)
    sc = _sample_scenes(rng, rho_def, cfg)
    idx = np.arange(n)

    success = rng.random(n) >= cfg.unsuccessful_rate
    missing_ball = rng.random(n) < cfg.missing_ball_rate
    pi = _break_probability(sc, intercept) * success
    _, _, faster = sc.leading_runners()
    feasible, run_frames, run_accel, run_target = _break_plan(sc, faster, rng.random(n), pitch)
    planted = (rng.random(n) < pi) & feasible
    expected = pi * feasible

    # receivers and flight times for the scripted non-breaks
    mid_pick = np.array(OFF_MID)[rng.integers(0, len(OFF_MID), n)]
    def_pick = np.array(OFF_DEF)[rng.integers(0, len(OFF_DEF), n)]
    receiver = np.where(sc.direction == BACKWARD, def_pick, mid_pick)
    receiver = np.where(planted, faster, receiver)
    flight = np.where(planted, run_frames, rng.integers(15, 51, n))
    T = flight / FPS

    # every other receiver stops short of the line at reception
    line_c = _second_largest(_positions_at(sc.def_xy, sc.def_v, T[:, None, None], pitch)[..., 0])
    rx0 = sc.off_xy[idx, receiver, 0]
    bound = line_c - 0.7 - rng.uniform(0.0, 3.0, n)
    short = ~planted & (rx0 + sc.off_v[idx, receiver, 0] * T > bound)
    sc.off_v[idx[short], receiver[short], 0] = (bound[short] - rx0[short]) / T[short]

    end = _positions_at(sc.off_xy[idx, receiver], sc.off_v[idx, receiver], T[:, None], pitch)
    end[planted, 0] = run_target[planted]

    movable = np.array(OFF_DEF + OFF_MID)
    choice = rng.integers(0, len(movable) - 1, n)
    passer = movable[choice]
    passer = np.where(passer == receiver, movable[-1], passer)
    sc.off_xy[idx, passer] = _place_passers(rng, sc, end, passer, pitch)

    # tracking blocks
    per_match_half = (n + 1) // 2
    period = np.where(idx < per_match_half, 1, 2)
    k = np.where(period == 1, idx, idx - per_match_half)
    release_ms = np.where(period == 1, 0, PERIOD2_START_MS) + PASS_SPACING_MS // 2 + k * PASS_SPACING_MS
    release_frame = release_ms // FRAME_MS
    rel_off = np.arange(-cfg.release_radius, cfg.release_radius + 1)
    rec_off = np.arange(-cfg.reception_radius, cfg.reception_radius + 1)
    n_rel = len(rel_off)
    offs = np.concatenate([np.broadcast_to(rel_off, (n, n_rel)), flight[:, None] + rec_off], axis=1)
    t = offs / FPS
    F = offs.shape[1]

    off_pos = _positions_at(sc.off_xy[:, None], sc.off_v[:, None], t[:, :, None, None], pitch)
    def_pos = _positions_at(sc.def_xy[:, None], sc.def_v[:, None], t[:, :, None, None], pitch)
    # planted runner: hold the release velocity, then accelerate uniformly
    pr = np.flatnonzero(planted)
    if len(pr):
        rs = faster[pr]
        x0 = sc.off_xy[pr, rs, 0][:, None]
        v0 = sc.off_v[pr, rs, 0][:, None]
        tt = t[pr]
        late = np.maximum(tt - HOLD_S, 0.0)
        x = x0 + v0 * tt + 0.5 * run_accel[pr][:, None] * late**2
        off_pos[pr[:, None], np.arange(F)[None, :], rs[:, None], 0] = np.clip(x, 0.5, pitch.length_m - 0.5)

    start = sc.off_xy[idx, passer]
    ball = np.empty((n, F, 2))
    frac = np.clip(t / T[:, None], 0.0, 1.0)[..., None]
    ball[:] = start[:, None, :] + frac * (end - start)[:, None, :]
    held = off_pos[idx[:, None], np.arange(F)[None, :], passer[:, None]]
    ball = np.where((t <= 0)[..., None], held, ball)

    # noise, then raw coordinates
    sig = cfg.noise_sigma_m
    if sig > 0:
        off_pos = off_pos + rng.normal(0.0, sig, off_pos.shape)
        def_pos = def_pos + rng.normal(0.0, sig, def_pos.shape)
        ball = ball + rng.normal(0.0, sig, ball.shape)
    possession = np.where(possession_home, HOME, AWAY)
    flips = np.array([
        attack_direction(match.home_attack_direction_p1, possession[i], int(period[i])) == LEFT for i in range(n)
    ])

    def raw(arr, ndim_extra):
        out = arr.copy()
        f = flips.reshape((n,) + (1,) * ndim_extra)
        out[..., 0] = np.where(f, pitch.length_m - arr[..., 0], arr[..., 0])
        out[..., 1] = np.where(f, pitch.width_m - arr[..., 1], arr[..., 1])
        return np.round(out, 2)

    off_raw = raw(off_pos, 2)
    def_raw = raw(def_pos, 2)
    ball_raw = raw(ball, 1)
    home_pos = np.where(possession_home[:, None, None, None], off_raw, def_raw)
    away_pos = np.where(possession_home[:, None, None, None], def_raw, off_raw)
    players = np.concatenate([home_pos, away_pos], axis=2).reshape(n * F * 2 * SQUAD, 2)

    home_ids = np.array([f"{home_team}-{j + 1:02d}" for j in range(SQUAD)], dtype=object)
    away_ids = np.array([f"{away_team}-{j + 1:02d}" for j in range(SQUAD)], dtype=object)
    frame_index = (release_frame[:, None] + offs).ravel().astype(np.int64)
    n_frames = n * F
    frames = MatchFrames(
        match_id=match.match_id,
        frame_index=frame_index,
        period=np.repeat(period, F).astype(np.int8),
        timestamp_ms=frame_index * FRAME_MS,
        ball=ball_raw.reshape(n_frames, 2),
        offsets=np.arange(n_frames + 1, dtype=np.int64) * 2 * SQUAD,
        side=np.tile(np.r_[np.zeros(SQUAD), np.ones(SQUAD)].astype(np.int8), n_frames),
        player_id=np.tile(np.concatenate([home_ids, away_ids]), n_frames),
        xy=players,
    )

    # events
    rec_col = n_rel + cfg.reception_radius
    ev_release = _event_ms(release_frame)
    ev_reception = _event_ms(release_frame + flight)
    start_raw = np.round(np.where(flips[:, None], [pitch.length_m, pitch.width_m] - start, start), 2)
    end_raw = np.round(np.where(flips[:, None], [pitch.length_m, pitch.width_m] - end, end), 2)
    if sig > 0:
        start_raw = np.round(start_raw + rng.normal(0.0, sig, start_raw.shape), 2)
        end_raw = np.round(end_raw + rng.normal(0.0, sig, end_raw.shape), 2)
    kind_u = rng.random(n)
    one_touch = rng.random(n) < cfg.one_touch_rate
    shot = rng.random(n) < cfg.shot_rate
    interceptor = np.array(DEF_MID + DEF_FWD)[rng.integers(0, 6, n)]
    regular = rng.random(n) < 0.5
    events, truth, prob = [], {}, {}
    exp_conceded = {HOME: 0.0, AWAY: 0.0}
    for i in range(n):
        team = possession[i]
        ids = home_ids if team == HOME else away_ids
        opp_ids = away_ids if team == HOME else home_ids
        if kind_u[i] < cfg.through_pass_rate:
            kind = "through_pass"
        elif kind_u[i] < cfg.through_pass_rate + cfg.flick_on_rate:
            kind = "flick_on"
        else:
            kind = "home_pass" if regular[i] else "away_pass"
        pid = f"{match.match_id}-p{i:04d}"
        events.append(EventRecord(
            event_id=pid, match_id=match.match_id, t_ms=int(ev_release[i]), kind=kind, team=team,
            player_id=ids[passer[i]], receiver_id=ids[receiver[i]] if success[i] else None,
            one_touch=bool(one_touch[i]), success=bool(success[i]),
            ball_start=None if missing_ball[i] else Position(float(start_raw[i, 0]), float(start_raw[i, 1])),
            ball_end=Position(float(end_raw[i, 0]), float(end_raw[i, 1])),
        ))
        r = Position(float(ball_raw[i, rec_col, 0]), float(ball_raw[i, rec_col, 1]))
        if success[i]:
            events.append(EventRecord(f"{pid}-r", match.match_id, int(ev_reception[i]), "receive", team,
                                      ids[receiver[i]], ball_start=r))
            if not missing_ball[i]:
                truth[pid] = int(planted[i])
                prob[pid] = float(expected[i])
            if shot[i]:
                events.append(EventRecord(f"{pid}-s", match.match_id, int(ev_reception[i]) + 1000, "shot",
                                          team, ids[receiver[i]], ball_start=r))
        else:
            events.append(EventRecord(f"{pid}-i", match.match_id, int(ev_reception[i]), "interception",
                                      HOME if team == AWAY else AWAY, opp_ids[interceptor[i]], ball_start=r))
        exp_conceded[AWAY if team == HOME else HOME] += float(expected[i])
    return _MatchScript(frames, events, truth, exp_conceded, prob)


def generate(config: SynthConfig = SynthConfig()) -> SynthResult:
    """Build the whole league in memory; identical configs give identical results."""
    cfg = config
    intercept = calibrate_intercept(cfg.target_positive_rate, tuple(cfg.line_height), cfg.pressing_line_shift)
    league_rng = np.random.default_rng([cfg.seed, 0])
    teams = [f"T{j + 1:02d}" for j in range(cfg.n_teams)]
    rho = np.asarray(cfg.pressing if cfg.pressing is not None else league_rng.uniform(0.0, 1.0, cfg.n_teams))
    directions = league_rng.random(cfg.n_rounds * cfg.matches_per_round) < 0.5
    schedule = round_robin(cfg.n_teams, cfg.n_rounds)

    matches, frames, records, truth, prob = [], {}, [], {}, {}
    expected = {t: 0.0 for t in teams}
    match_no = 0
    for rnd, pairs in enumerate(schedule, start=1):
        for slot, (h, a) in enumerate(pairs, start=1):
            match_no += 1
            mid = f"R{rnd}M{slot}"
            stub = MatchInfo(mid, rnd, teams[h], teams[a], RIGHT if directions[match_no - 1] else LEFT)
            script = _script_match(cfg, stub, match_no, float(rho[h]), float(rho[a]), intercept, teams[h], teams[a])
            crng = np.random.default_rng([cfg.seed, match_no, 1])
            lam_h = cfg.conceded_base + cfg.conceded_per_break * script.expected_breaks[HOME]
            lam_a = cfg.conceded_base + cfg.conceded_per_break * script.expected_breaks[AWAY]
            matches.append(MatchInfo(
                mid, rnd, teams[h], teams[a], stub.home_attack_direction_p1,
                crosses_conceded_home=int(crng.poisson(0.65 * lam_h)),
                crosses_conceded_away=int(crng.poisson(0.65 * lam_a)),
                shots_conceded_home=int(crng.poisson(0.35 * lam_h)),
                shots_conceded_away=int(crng.poisson(0.35 * lam_a)),
            ))
            expected[teams[h]] += script.expected_breaks[HOME]
            expected[teams[a]] += script.expected_breaks[AWAY]
            frames[mid] = script.frames
            records.extend(script.events)
            truth.update(script.truth)
            prob.update(script.break_probability)
    report = ReadReport()
    dataset = build_dataset(matches, FrameStore(frames), retain_records(records, report), report)
    return SynthResult(dataset, truth, dict(zip(teams, rho.tolist())), expected, intercept, records, prob)


TRUTH_FILE = "truth.csv"


def write_truth(truth: dict[str, int], path) -> None:
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pass_id", "label"])
        for pid in sorted(truth):
            w.writerow([pid, truth[pid]])


def read_truth(path) -> dict[str, int]:
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["pass_id"]: int(row["label"]) for row in csv.DictReader(fh)}


def write_synth(result: SynthResult, directory) -> None:
    """Write the tracking, events and matches files plus the planted labels."""
    d = Path(directory)
    write_dataset(result.dataset, d)
    # the raw feed, including the passes the reader will exclude
    order = {m: i for i, m in enumerate(result.dataset.matches)}
    write_events(sorted(result.records, key=lambda r: (order[r.match_id], r.t_ms, r.event_id)), d / EVENTS_FILE)
    write_truth(result.truth, d / TRUTH_FILE)
