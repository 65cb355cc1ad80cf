"""Velocity and acceleration from 25 Hz position samples.

Positions are smoothed with a centred 5-sample moving average (the window
shrinks symmetrically near the ends of the series), then differentiated with
central differences, one-sided at the edges. Acceleration is the same
difference applied to the velocity series.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FPS = 25.0
SMOOTHING_WINDOW = 5
MAX_SPEED = 13.0
MAX_ACCEL = 12.0
MAX_GAP_FRAMES = 5
# a central-difference acceleration at frame t reads smoothed samples t-2..t+2
_SUPPORT = SMOOTHING_WINDOW // 2 + 2


@dataclass(frozen=True, slots=True)
class KinematicState:
    vx: float
    vy: float
    ax: float
    ay: float
    clamped: bool = False
    low_confidence: bool = False

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


def smooth(series: np.ndarray, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Centred moving average along axis 0 with symmetric truncation at the edges."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    half = window // 2
    c = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(x, axis=0)], axis=0)
    out = np.empty_like(x)
    for i in range(n):
        r = min(half, i, n - 1 - i)
        out[i] = (c[i + r + 1] - c[i - r]) / (2 * r + 1)
    return out


def _cap(vec: np.ndarray, limit: float):
    norm = np.hypot(vec[..., 0], vec[..., 1])
    over = norm > limit
    if np.any(over):
        scale = np.where(over, limit / np.where(norm > 0, norm, 1.0), 1.0)
        vec = vec * scale[..., None]
    return vec, over


def derivatives(positions: np.ndarray, frames: np.ndarray, fps: float = FPS):
    """Velocity and acceleration series for positions shaped (T, ..., 2)."""
    pos = np.asarray(positions, dtype=float)
    t = np.asarray(frames, dtype=float) / fps
    if pos.shape[0] < 2:
        raise ValueError("kinematics need at least 2 samples")
    s = smooth(pos)
    v = np.gradient(s, t, axis=0, edge_order=1)
    a = np.gradient(v, t, axis=0, edge_order=1)
    return v, a


def estimate_kinematics_batch(positions, frames, at_frame: int, fps: float = FPS):
    """Kinematics of several players at one frame.

    Parameters
    ----------
    positions : array (T, P, 2)
        Position samples of P players at the frame indices ``frames``.
    frames : array (T,)
        Strictly increasing frame indices.
    at_frame : int
        Frame to evaluate at; must be one of ``frames``.

    Returns
    -------
    vel, acc : arrays (P, 2), capped to the physiological limits
    clamped, low_confidence : bool arrays (P,)
    """
    frames = np.asarray(frames)
    hits = np.flatnonzero(frames == at_frame)
    if len(hits) == 0:
        raise ValueError(f"frame {at_frame} not in the sample series")
    i = int(hits[0])
    if np.any(np.diff(frames) <= 0):
        raise ValueError("frame indices must be strictly increasing")
    v, a = derivatives(positions, frames, fps)
    vel, v_over = _cap(v[i], MAX_SPEED)
    acc, a_over = _cap(a[i], MAX_ACCEL)
    lo, hi = max(i - _SUPPORT, 0), min(i + _SUPPORT, len(frames) - 1)
    gappy = bool(np.any(np.diff(frames[lo : hi + 1]) > MAX_GAP_FRAMES + 1))
    npl = vel.shape[0] if vel.ndim > 1 else 1
    low = np.full(npl, gappy)
    return vel, acc, np.atleast_1d(v_over | a_over), low


def estimate_kinematics(positions, frames, at_frame: int, fps: float = FPS) -> KinematicState:
    """Velocity (m/s) and acceleration (m/s^2) of one player at ``at_frame``.

    ``positions`` is a (T, 2) series sampled at ``frames``. Values beyond
    13 m/s or 12 m/s^2 are scaled down to the cap and flagged; a hole of more
    than five missing frames near ``at_frame`` marks the estimate as low
    confidence.
    """
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    vel, acc, clamped, low = estimate_kinematics_batch(pos[:, None, :], frames, at_frame, fps)
    return KinematicState(
        float(vel[0, 0]), float(vel[0, 1]), float(acc[0, 0]), float(acc[0, 1]),
        clamped=bool(clamped[0]), low_confidence=bool(low[0]),
    )
