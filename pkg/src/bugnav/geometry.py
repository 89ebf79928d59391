"""Planar primitives and ray casting.

Walls are line segments; range beams are rays that stop at the nearest wall.
A beam that hits nothing within its maximum range returns the ``OR``
sentinel. ``OR`` supports no arithmetic and no ordering, so every consumer
has to branch on it explicitly instead of treating it as a large number.

The scalar functions here are the reference implementations. The hot loop
of the simulator uses the batched numba kernels ``cast_rays`` and
``min_wall_distance`` on an ``(N, 4)`` array of segment endpoints.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


class _OutOfRange:
    """Singleton marking a beam reading with no wall inside max range."""

    _instance = None
    __slots__ = ()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OR"

    def __reduce__(self):
        return (_OutOfRange, ())


OR = _OutOfRange()


def is_or(reading) -> bool:
    return reading is OR


def normalize_angle(angle: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    result = wrapped - math.pi
    # fmod rounding can land exactly on +pi
    if result >= math.pi:
        result -= TWO_PI
    return result


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def scaled(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other) -> float:
        return math.hypot(self.x - other[0], self.y - other[1])


class Pose(NamedTuple):
    position: Vec2
    heading: float

    @classmethod
    def at(cls, x: float, y: float, heading: float) -> "Pose":
        return cls(Vec2(float(x), float(y)), normalize_angle(heading))


class Segment(NamedTuple):
    a: Vec2
    b: Vec2

    def length(self) -> float:
        return self.a.dist(self.b)


def make_segment(ax: float, ay: float, bx: float, by: float) -> Segment:
    if ax == bx and ay == by:
        raise ValueError("degenerate segment: endpoints coincide")
    return Segment(Vec2(float(ax), float(ay)), Vec2(float(bx), float(by)))


def segments_to_array(walls: Sequence[Segment]) -> np.ndarray:
    arr = np.empty((len(walls), 4), dtype=np.float64)
    for i, s in enumerate(walls):
        arr[i] = (s.a.x, s.a.y, s.b.x, s.b.y)
    return arr


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def ray_segment_distance(origin, direction: float, seg: Segment):
    """Distance along the ray to ``seg``, or None when the ray misses it.

    Parallel (including collinear) segments count as misses: a beam sliding
    along a wall face never returns that face.
    """
    dx, dy = math.cos(direction), math.sin(direction)
    ex, ey = seg.b.x - seg.a.x, seg.b.y - seg.a.y
    denom = _cross(dx, dy, ex, ey)
    if abs(denom) < 1e-12:
        return None
    wx, wy = seg.a.x - origin[0], seg.a.y - origin[1]
    t = _cross(wx, wy, ex, ey) / denom
    u = _cross(wx, wy, dx, dy) / denom
    if t < 0.0 or u < 0.0 or u > 1.0:
        return None
    return t


def ray_cast(origin, direction: float, walls: Sequence[Segment], max_range: float):
    """Range from ``origin`` along ``direction`` to the nearest wall.

    Returns a float strictly below ``max_range`` or the ``OR`` sentinel.
    """
    if not max_range > 0:
        raise ValueError("max_range must be positive")
    if not math.isfinite(direction):
        raise ValueError("direction must be finite")
    best = math.inf
    for seg in walls:
        t = ray_segment_distance(origin, direction, seg)
        if t is not None and t < best:
            best = t
    return best if best < max_range else OR


def segment_distance(p, s: Segment) -> float:
    """Euclidean distance from point ``p`` to the closest point of ``s``."""
    ex, ey = s.b.x - s.a.x, s.b.y - s.a.y
    px, py = p[0] - s.a.x, p[1] - s.a.y
    l2 = ex * ex + ey * ey
    u = (px * ex + py * ey) / l2
    if u <= 0.0:
        return math.hypot(px, py)
    if u >= 1.0:
        return math.hypot(p[0] - s.b.x, p[1] - s.b.y)
    return math.hypot(px - u * ex, py - u * ey)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test, touching endpoints included."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def crosses_m_line(prev, cur, m_line: Segment, tol: float = 0.05) -> bool:
    """True when the step prev->cur touches the M-line band.

    The step counts if it intersects the segment or if either of its
    endpoints lies within ``tol`` of it (symmetric in prev/cur).
    """
    if segment_distance(cur, m_line) <= tol or segment_distance(prev, m_line) <= tol:
        return True
    if prev[0] == cur[0] and prev[1] == cur[1]:
        return False
    return segments_intersect(prev, cur, m_line.a, m_line.b)


@njit(cache=True)
def cast_rays(ox, oy, angles, segs, max_range):
    """Batched ray cast. Misses come back as ``inf``; callers map them to OR."""
    n = angles.shape[0]
    out = np.empty(n)
    for i in range(n):
        dx = math.cos(angles[i])
        dy = math.sin(angles[i])
        best = np.inf
        for k in range(segs.shape[0]):
            ax = segs[k, 0]
            ay = segs[k, 1]
            ex = segs[k, 2] - ax
            ey = segs[k, 3] - ay
            denom = dx * ey - dy * ex
            if abs(denom) < 1e-12:
                continue
            wx = ax - ox
            wy = ay - oy
            t = (wx * ey - wy * ex) / denom
            if t < 0.0 or t >= best:
                continue
            u = (wx * dy - wy * dx) / denom
            if u < 0.0 or u > 1.0:
                continue
            best = t
        out[i] = best if best < max_range else np.inf
    return out


@njit(cache=True)
def min_wall_distance(px, py, segs):
    best = np.inf
    for k in range(segs.shape[0]):
        ax = segs[k, 0]
        ay = segs[k, 1]
        ex = segs[k, 2] - ax
        ey = segs[k, 3] - ay
        qx = px - ax
        qy = py - ay
        u = (qx * ex + qy * ey) / (ex * ex + ey * ey)
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
        rx = qx - u * ex
        ry = qy - u * ey
        d = math.sqrt(rx * rx + ry * ry)
        if d < best:
            best = d
    return best
