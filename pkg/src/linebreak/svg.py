"""Dependency-free SVG documents: pitch snapshots, team scatter and attribution summaries."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .domain import AWAY, HOME, Pitch, TrackingFrame
from .geometry import DefensiveLine, voronoi_tessellation

SIDE_COLOURS = {HOME: "#d62728", AWAY: "#1f77b4"}
CELL_FILLS = {HOME: "#f4c7c7", AWAY: "#c6dbef"}


def _n(v: float) -> str:
    # round-trip safe and stable across platforms; integers print without a fraction
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _attrs(**kw) -> str:
    parts = []
    for k, v in kw.items():
        if v is None:
            continue
        name = k.rstrip("_").replace("_", "-")
        parts.append(f"{name}={quoteattr(_n(v) if isinstance(v, (float, np.floating)) else str(v))}")
    return " ".join(parts)


class Document:
    def __init__(self, width: float, height: float, view_box: Optional[tuple[float, float, float, float]] = None):
        self.width, self.height = width, height
        self.view_box = view_box or (0.0, 0.0, width, height)
        self.parts: list[str] = []

    def add(self, tag: str, text: Optional[str] = None, **kw) -> None:
        a = _attrs(**kw)
        head = f"<{tag} {a}" if a else f"<{tag}"
        self.parts.append(f"{head}/>" if text is None else f"{head}>{escape(text)}</{tag}>")

    def open(self, tag: str, **kw) -> None:
        a = _attrs(**kw)
        self.parts.append(f"<{tag} {a}>" if a else f"<{tag}>")

    def close(self, tag: str) -> None:
        self.parts.append(f"</{tag}>")

    def render(self) -> str:
        vb = " ".join(_n(v) for v in self.view_box)
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_n(self.width)}" '
                f'height="{_n(self.height)}" viewBox="{vb}">')
        return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head, *self.parts, "</svg>", ""])


def _points(poly) -> str:
    return " ".join(f"{_n(x)},{_n(y)}" for x, y in poly)


def _pitch_markings(doc: Document, pitch: Pitch) -> None:
    L, W = pitch.length_m, pitch.width_m
    style = dict(fill="none", stroke="#ffffff", stroke_width=0.3)
    doc.open("g", class_="markings")
    doc.add("line", x1=L / 2, y1=0.0, x2=L / 2, y2=W, **style)
    doc.add("circle", cx=L / 2, cy=W / 2, r=9.15, **style)
    for x0, sign in ((0.0, 1), (L, -1)):
        for depth, half in ((16.5, 20.16), (5.5, 9.16)):
            x = x0 if sign > 0 else x0 - depth
            doc.add("rect", x=x, y=W / 2 - half, width=depth, height=2 * half, **style)
    doc.close("g")


def pitch_svg(
    frame: TrackingFrame,
    pitch: Pitch = Pitch(),
    line: Optional[DefensiveLine] = None,
    scale: float = 8.0,
) -> str:
    """Snapshot of one frame: Voronoi cells, players, ball and an optional defensive line.

    Drawing uses pitch metres as user units with ``y`` pointing down the
    page. Each cell is a ``polygon`` of class ``cell`` carrying the owning
    player in ``data-player``.
    """
    L, W = pitch.length_m, pitch.width_m
    doc = Document(L * scale, W * scale, (0.0, 0.0, L, W))
    doc.add("rect", class_="pitch", x=0.0, y=0.0, width=L, height=W, fill="#3a7d44")
    owners = [p.player_id for p in frame.players]
    cells = voronoi_tessellation([p.position for p in frame.players], pitch, owners)
    doc.open("g", class_="cells")
    for player, cell in zip(frame.players, cells):
        doc.add("polygon", class_="cell", data_player=player.player_id, data_side=player.side,
                points=_points(cell.polygon), fill=CELL_FILLS[player.side], fill_opacity=0.55,
                stroke="#555555", stroke_width=0.1)
    doc.close("g")
    _pitch_markings(doc, pitch)
    if line is not None:
        doc.add("line", class_="defensive-line", data_team=line.team or "", x1=line.line_x, y1=0.0,
                x2=line.line_x, y2=W, stroke="#ffdd00", stroke_width=0.4, stroke_dasharray="1.5,1")
    doc.open("g", class_="players")
    for p in frame.players:
        doc.add("circle", class_="player", data_player=p.player_id, data_side=p.side, cx=p.position.x,
                cy=p.position.y, r=0.9, fill=SIDE_COLOURS[p.side], stroke="#000000", stroke_width=0.15)
    doc.close("g")
    doc.add("circle", class_="ball", cx=frame.ball.x, cy=frame.ball.y, r=0.5, fill="#ffffff",
            stroke="#000000", stroke_width=0.15)
    doc.add("title", f"{frame.match_id} frame {frame.frame_index}")
    return doc.render()


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [round(start + i * step, 12) for i in range(int((hi - start) / step + 1e-9) + 1)]


def _padded(values) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = (hi - lo) * 0.05 or 1.0
    return lo - pad, hi + pad


def scatter_svg(
    x: Sequence[float], y: Sequence[float], labels: Sequence[str] = (), x_label: str = "", y_label: str = "",
    title: str = "", width: float = 640.0, height: float = 480.0,
) -> str:
    """Labelled scatter with a least-squares line, e.g. break exposure against chances conceded."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0 or x.shape != y.shape:
        raise ValueError("scatter needs equal-length, non-empty series")
    m = dict(left=70.0, right=20.0, top=40.0, bottom=55.0)
    pw, ph = width - m["left"] - m["right"], height - m["top"] - m["bottom"]
    (x0, x1), (y0, y1) = _padded(x), _padded(y)

    def px(v):
        return m["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return m["top"] + ph - (v - y0) / (y1 - y0) * ph

    doc = Document(width, height)
    doc.add("rect", x=0.0, y=0.0, width=width, height=height, fill="#ffffff")
    doc.add("rect", class_="plot-area", x=m["left"], y=m["top"], width=pw, height=ph, fill="none", stroke="#333333")
    for t in _nice_ticks(x0, x1):
        doc.add("text", f"{t:g}", x=px(t), y=m["top"] + ph + 18, font_size=11, text_anchor="middle")
    for t in _nice_ticks(y0, y1):
        doc.add("text", f"{t:g}", x=m["left"] - 8, y=py(t) + 4, font_size=11, text_anchor="end")
    if len(x) >= 2 and np.ptp(x) > 0:
        slope, icept = np.polyfit(x, y, 1)
        doc.add("line", class_="fit", x1=px(x0), y1=py(icept + slope * x0), x2=px(x1), y2=py(icept + slope * x1),
                stroke="#888888", stroke_dasharray="4,3")
    doc.open("g", class_="points")
    for i, (a, b) in enumerate(zip(x, y)):
        label = labels[i] if i < len(labels) else ""
        doc.add("circle", class_="point", data_label=label, cx=px(a), cy=py(b), r=4.0, fill="#1f77b4")
        if label:
            doc.add("text", label, x=px(a) + 6, y=py(b) - 6, font_size=10)
    doc.close("g")
    doc.add("text", x_label, x=m["left"] + pw / 2, y=height - 12, font_size=13, text_anchor="middle")
    doc.add("text", y_label, x=16.0, y=m["top"] + ph / 2, font_size=13, text_anchor="middle",
            transform=f"rotate(-90 16 {_n(m['top'] + ph / 2)})")
    if title:
        doc.add("text", title, x=width / 2, y=24.0, font_size=14, text_anchor="middle")
    return doc.render()


def _percentile_colour(q: float) -> str:
    # blue for low feature values through to red for high ones
    q = min(max(q, 0.0), 1.0)
    r, g, b = int(30 + 210 * q), int(90 - 40 * abs(q - 0.5) * 2), int(230 - 200 * q)
    return f"#{r:02x}{g:02x}{b:02x}"


def shap_summary_svg(
    ranking: Sequence[tuple[str, float]],
    points: Sequence[tuple[str, float, float]] = (),
    top_k: int = 20,
    width: float = 760.0,
) -> str:
    """Bars of mean |phi| per feature, most important on top, with an optional beeswarm column.

    ``ranking`` is ``(feature, mean_abs_phi)`` in rank order; ``points`` are
    ``(feature, phi, value_percentile)`` rows and draw one coloured dot per
    pass beside the bars when given.
    """
    rows = list(ranking)[:top_k]
    if not rows:
        raise ValueError("empty attribution ranking")
    row_h, top, left = 22.0, 40.0, 220.0
    height = top + row_h * len(rows) + 40.0
    swarm = bool(points)
    bar_w = (width - left - 30.0) / (2 if swarm else 1)
    doc = Document(width, height)
    doc.add("rect", x=0.0, y=0.0, width=width, height=height, fill="#ffffff")
    vmax = max(v for _, v in rows) or 1.0
    doc.open("g", class_="bars")
    for i, (name, value) in enumerate(rows):
        y = top + i * row_h
        doc.add("text", name, x=left - 8, y=y + row_h * 0.65, font_size=11, text_anchor="end")
        doc.add("rect", class_="bar", data_feature=name, x=left, y=y + 3, width=bar_w * value / vmax,
                height=row_h - 6, fill="#1f77b4")
    doc.close("g")
    doc.add("text", "mean |SHAP| (log-odds)", x=left + bar_w / 2, y=height - 12, font_size=12, text_anchor="middle")
    if swarm:
        names = [n for n, _ in rows]
        index = {n: i for i, n in enumerate(names)}
        sel = [(index[f], p, q) for f, p, q in points if f in index]
        lim = max((abs(p) for _, p, _ in sel), default=1.0) or 1.0
        x_mid = left + bar_w + 15 + bar_w / 2
        doc.add("line", x1=x_mid, y1=top, x2=x_mid, y2=top + row_h * len(rows), stroke="#999999")
        # deterministic vertical jitter keeps identical inputs byte-identical
        jitter = np.random.default_rng(0)
        doc.open("g", class_="swarm")
        for i, p, q in sel:
            y = top + i * row_h + row_h / 2 + float(jitter.uniform(-0.35, 0.35)) * row_h
            doc.add("circle", class_="dot", cx=x_mid + p / lim * (bar_w / 2 - 4), cy=y, r=1.6,
                    fill=_percentile_colour(q), fill_opacity=0.7)
        doc.close("g")
        doc.add("text", "SHAP value (log-odds), colour = feature value percentile", x=x_mid, y=height - 12,
                font_size=12, text_anchor="middle")
    return doc.render()


__all__ = ["Document", "pitch_svg", "scatter_svg", "shap_summary_svg"]
