"""Pitch-bounded Voronoi tessellation, defensive lines and line gaps.

Each player's cell is built by clipping the pitch rectangle against the
half-plane ``{q : |q - p| <= |q - s|}`` of every other site ``s``. Sites are
visited nearest first and clipping stops as soon as the next site is more than
twice as far away as the furthest vertex of the current cell, since no such
bisector can cut it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from .domain import OrderedSquads, Pitch, Position

COINCIDENT_NUDGE_M = 1e-6
_MAX_NUDGES = 1000


class CoincidentSites(ValueError):
    pass


@dataclass(frozen=True)
class VoronoiCell:
    owner: str
    polygon: tuple[tuple[float, float], ...]
    area: float


@dataclass(frozen=True)
class DefensiveLine:
    team: Optional[str]
    line_x: float
    reference_player_index: int


@numba.njit(cache=True)
def _clip(poly, n, px, py, nx, ny, out):
    # keep the part of poly where (q - p) . normal <= 0
    m = 0
    for k in range(n):
        ax = poly[k, 0]
        ay = poly[k, 1]
        bx = poly[(k + 1) % n, 0]
        by = poly[(k + 1) % n, 1]
        fa = (ax - px) * nx + (ay - py) * ny
        fb = (bx - px) * nx + (by - py) * ny
        if fa <= 0.0:
            out[m, 0] = ax
            out[m, 1] = ay
            m += 1
            if fb > 0.0 and fa < 0.0:
                t = fa / (fa - fb)
                out[m, 0] = ax + t * (bx - ax)
                out[m, 1] = ay + t * (by - ay)
                m += 1
        elif fb < 0.0:
            t = fa / (fa - fb)
            out[m, 0] = ax + t * (bx - ax)
            out[m, 1] = ay + t * (by - ay)
            m += 1
    return m


@numba.njit(cache=True)
def _shoelace(poly, n):
    s = 0.0
    for k in range(n):
        j = (k + 1) % n
        s += poly[k, 0] * poly[j, 1] - poly[j, 0] * poly[k, 1]
    return 0.5 * abs(s)


@numba.njit(cache=True)
def _tessellate(sites, length, width, verts, counts, areas):
    n = sites.shape[0]
    cap = verts.shape[1]
    buf_a = np.empty((cap, 2))
    buf_b = np.empty((cap, 2))
    d2 = np.empty(n)
    for i in range(n):
        sx = sites[i, 0]
        sy = sites[i, 1]
        buf_a[0, 0] = 0.0
        buf_a[0, 1] = 0.0
        buf_a[1, 0] = length
        buf_a[1, 1] = 0.0
        buf_a[2, 0] = length
        buf_a[2, 1] = width
        buf_a[3, 0] = 0.0
        buf_a[3, 1] = width
        m = 4
        for j in range(n):
            d2[j] = (sites[j, 0] - sx) ** 2 + (sites[j, 1] - sy) ** 2
        order = np.argsort(d2, kind="mergesort")
        cur = buf_a
        nxt = buf_b
        for jj in range(n):
            j = order[jj]
            if j == i:
                continue
            r2 = 0.0
            for k in range(m):
                dd = (cur[k, 0] - sx) ** 2 + (cur[k, 1] - sy) ** 2
                if dd > r2:
                    r2 = dd
            if d2[j] >= 4.0 * r2:
                break
            mx = 0.5 * (sx + sites[j, 0])
            my = 0.5 * (sy + sites[j, 1])
            m = _clip(cur, m, mx, my, sites[j, 0] - sx, sites[j, 1] - sy, nxt)
            tmp = cur
            cur = nxt
            nxt = tmp
            if m == 0:
                break
        counts[i] = m
        for k in range(m):
            verts[i, k, 0] = cur[k, 0]
            verts[i, k, 1] = cur[k, 1]
        areas[i] = _shoelace(cur, m) if m >= 3 else 0.0


def _prepare_sites(sites, pitch: Pitch) -> np.ndarray:
    arr = np.array(sites, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("voronoi tessellation needs at least one site")
    if not np.all(np.isfinite(arr)):
        raise ValueError("site coordinates must be finite")
    arr[:, 0] = np.clip(arr[:, 0], 0.0, pitch.length_m)
    arr[:, 1] = np.clip(arr[:, 1], 0.0, pitch.width_m)
    for i in range(1, arr.shape[0]):
        for _ in range(_MAX_NUDGES):
            earlier = arr[:i]
            if not np.any((earlier[:, 0] == arr[i, 0]) & (earlier[:, 1] == arr[i, 1])):
                break
            arr[i, 0] += COINCIDENT_NUDGE_M
        else:
            raise CoincidentSites(f"site {i} still coincides with another site after {_MAX_NUDGES} nudges")
    return arr


def voronoi_arrays(sites, pitch: Pitch = Pitch()):
    """Vectorised tessellation; returns ``(vertices, counts, areas)`` arrays.

    ``vertices[i, :counts[i]]`` is the counter-clockwise polygon of site ``i``.
    Sites are clamped to the pitch and exact duplicates nudged by 1e-6 m in +x.
    """
    arr = _prepare_sites(sites, pitch)
    n = arr.shape[0]
    cap = n + 5
    verts = np.zeros((n, cap, 2))
    counts = np.zeros(n, dtype=np.int64)
    areas = np.zeros(n)
    _tessellate(arr, float(pitch.length_m), float(pitch.width_m), verts, counts, areas)
    return verts, counts, areas


def voronoi_areas(sites, pitch: Pitch = Pitch()) -> np.ndarray:
    return voronoi_arrays(sites, pitch)[2]


def voronoi_tessellation(
    sites: Sequence[Position], pitch: Pitch = Pitch(), owners: Optional[Sequence[str]] = None
) -> list[VoronoiCell]:
    """Partition the pitch into one convex cell per site.

    Parameters
    ----------
    sites : sequence of Position or (x, y) pairs
    pitch : Pitch
    owners : optional ids, one per site; defaults to the site index

    Returns
    -------
    list of VoronoiCell, in input order. Cell areas sum to the pitch area.
    """
    pts = [(s.x, s.y) if isinstance(s, Position) else tuple(s) for s in sites]
    verts, counts, areas = voronoi_arrays(pts, pitch)
    if owners is None:
        owners = [str(i) for i in range(len(pts))]
    if len(owners) != len(pts):
        raise ValueError("owners and sites differ in length")
    cells = []
    for i, owner in enumerate(owners):
        poly = tuple((float(x), float(y)) for x, y in verts[i, : counts[i]])
        cells.append(VoronoiCell(owner, poly, float(areas[i])))
    return cells


def polygon_area(polygon) -> float:
    poly = np.asarray(polygon, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def defensive_line(
    xs, own_goal: int = +1, team: Optional[str] = None, pitch: Pitch = Pitch()
) -> DefensiveLine:
    """Line through the second-last player of a team relative to its own goal line.

    ``xs`` are the team's x coordinates (or Positions) in any order.
    ``own_goal`` is +1 when the team defends the goal at ``x = length``
    and -1 for the goal at ``x = 0``.
    """
    vals = [p.x if isinstance(p, Position) else float(p) for p in xs]
    if len(vals) < 2:
        raise ValueError(f"defensive line needs at least 2 players, got {len(vals)}")
    if own_goal not in (1, -1):
        raise ValueError("own_goal must be +1 or -1")
    by_goal = sorted(vals, reverse=(own_goal == 1))
    line_x = min(max(by_goal[1], 0.0), pitch.length_m)
    # rank counted from the far end, i.e. d_10 of an eleven-man defense
    return DefensiveLine(team, line_x, len(vals) - 1)


def line_gaps(squads: OrderedSquads) -> tuple[float, float, float]:
    """x-gaps from the line defender d_10 to d_9, d_8 and d_7."""
    n = len(squads.defense)
    if n < 4:
        raise ValueError("line gaps need at least 4 defenders")
    ref = squads.defense[n - 2].position.x
    return tuple(ref - squads.defense[n - 2 - k].position.x for k in (1, 2, 3))


def nearest_defender_distance(passer: Position, defenders: Sequence[Position]) -> float:
    if len(defenders) == 0:
        raise ValueError("no defenders")
    return min(math.hypot(d.x - passer.x, d.y - passer.y) for d in defenders)
