"""Wall-following controller shared by every bug algorithm.

Three modes: rotate in place until the side beam is aligned with the wall,
drive along the wall while holding ``d_ref``, and go around an outer corner
when the front-side beam loses the wall. The corner manoeuvre drives straight
until the side beam has passed the wall end and then turns on a circle of
radius ``d_ref`` around it.

Angular rates are counter-clockwise positive. ``side`` is +1 when the wall
is kept on the right and -1 when it is kept on the left, so turning away
from the wall is ``+side * c_w`` and turning towards it ``-side * c_w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import OR
from .robot import BODY_RADIUS, SensorScan


class WFMode(Enum):
    ROTATE_TO_ALIGN_WALL = "rotate_to_align_wall"
    FOLLOW_AND_ALIGN = "wall_following_and_aligning"
    ROTATE_AROUND_CORNER = "rotate_around_corner"


@dataclass(frozen=True)
class WFState:
    mode: WFMode = WFMode.ROTATE_TO_ALIGN_WALL
    side: int = 1
    # corner mode only: the side beam has passed the wall end
    arcing: bool = False

    def __post_init__(self):
        if self.side not in (1, -1):
            raise ValueError("side must be +1 (right) or -1 (left)")


@dataclass(frozen=True)
class WFParams:
    d_ref: float = 0.5
    t_d: float = 0.10
    c_v: float = 0.5
    c_w: float = 1.0
    beta: float = math.pi / 3
    align_tol: float = 0.05
    # half-width of the strip ahead of the robot that counts as "in front"
    front_half_width: float = BODY_RADIUS + 0.03
    ransac_iterations: int = 50
    ransac_threshold: float = 0.05

    def __post_init__(self):
        if not self.d_ref > self.t_d > 0:
            raise ValueError("need d_ref > t_d > 0")
        if not 0 < self.beta < math.pi:
            raise ValueError("beta must lie in (0, pi)")


class DegenerateTriangleError(ValueError):
    pass


class InsufficientPointsError(ValueError):
    pass


def perpendicular_distance(r_s: float, r_f: float, beta: float) -> float:
    """Height of the triangle spanned by two beams of lengths r_s, r_f.

    With both beam endpoints on the same straight wall this is the
    perpendicular distance from the sensor origin to that wall.
    """
    if r_s is OR or r_f is OR:
        raise TypeError("perpendicular_distance needs two finite readings")
    if not 0 < beta < math.pi:
        raise ValueError("beta must lie in (0, pi)")
    base_sq = r_s * r_s + r_f * r_f - 2.0 * r_s * r_f * math.cos(beta)
    base = math.sqrt(max(base_sq, 0.0))
    if base < 1e-9:
        raise DegenerateTriangleError("beam endpoints coincide")
    return r_s * r_f * math.sin(beta) / base


@dataclass(frozen=True)
class WallFit:
    angle: float  # wall direction in the body frame, in (-pi/2, pi/2]
    distance: float  # perpendicular distance from the robot origin
    inliers: np.ndarray


def _line_through(px, py, i, j):
    dx = px[j] - px[i]
    dy = py[j] - py[i]
    norm = np.hypot(dx, dy)
    return dx, dy, norm


def ransac_wall_fit(
    xs,
    ys,
    rng: np.random.Generator,
    iterations: int = 50,
    threshold: float = 0.05,
) -> WallFit:
    """RANSAC line through body-frame beam endpoints.

    Candidate lines come from random point pairs; the one with most inliers
    wins (first one on ties) and is refined by a total-least-squares fit on
    its inliers.
    """
    px = np.asarray(xs, dtype=float)
    py = np.asarray(ys, dtype=float)
    n = px.shape[0]
    if n < 2:
        raise InsufficientPointsError(f"need at least 2 finite beams, got {n}")
    if n == 2:
        inliers = np.ones(2, dtype=bool)
    else:
        i = rng.integers(0, n, size=iterations)
        j = (i + rng.integers(1, n, size=iterations)) % n
        dx, dy, norm = _line_through(px, py, i, j)
        # point-to-line distances for every candidate (rows) and point (cols)
        rel_x = px[None, :] - px[i][:, None]
        rel_y = py[None, :] - py[i][:, None]
        dist = np.abs(rel_x * dy[:, None] - rel_y * dx[:, None]) / norm[:, None]
        counts = (dist <= threshold).sum(axis=1)
        best = int(np.argmax(counts))
        inliers = dist[best] <= threshold
    cx = px[inliers].mean()
    cy = py[inliers].mean()
    qx = px[inliers] - cx
    qy = py[inliers] - cy
    sxx, syy, sxy = float(qx @ qx), float(qy @ qy), float(qx @ qy)
    # principal direction of the inlier cloud
    angle = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
    ux, uy = math.cos(angle), math.sin(angle)
    distance = abs(cx * uy - cy * ux)
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return WallFit(angle, distance, inliers)


def front_distance(scan: SensorScan, params: WFParams):
    """Forward clearance to the nearest return inside the body-wide strip.

    Returns None when nothing within ``2 * d_ref`` blocks the strip ahead.
    Walls running alongside the robot fall outside the strip and are ignored.
    """
    best = None
    for r, a in zip(scan.wedge, scan.wedge_angles):
        if r is OR or r >= 2.0 * params.d_ref:
            continue
        if abs(r * math.sin(a)) <= params.front_half_width:
            x = r * math.cos(a)
            if best is None or x < best:
                best = x
    return best


def _side_points(scan: SensorScan, side: int):
    """Side-beam endpoint, r_f endpoint, then the other finite wedge returns on that side."""
    n = len(scan.ranges)
    order = range(0, n // 2) if side == 1 else range(n - 1, n - 1 - n // 2, -1)
    xs, ys = [], []
    for i in order:
        r = scan.ranges[i]
        if r is OR:
            if i in (0, n - 1, 1, n - 2):
                return None
            continue
        a = scan.beam_angles[i]
        xs.append(r * math.cos(a))
        ys.append(r * math.sin(a))
    return xs, ys


def same_wall(scan: SensorScan, side: int, params: WFParams, rng: np.random.Generator) -> bool:
    """r_s and r_f end on the same straight wall.

    Lines are peeled off the side beam and the wedge returns on the following
    side by repeated RANSAC. The first line that claims either reference beam
    has to claim both. Guards the alignment test against r_s and r_f landing
    on two different walls, as happens around a wall end in a narrow corridor.
    """
    pts = _side_points(scan, side)
    if pts is None:
        return False
    xs = np.asarray(pts[0])
    ys = np.asarray(pts[1])
    idx = np.arange(xs.shape[0])
    while idx.shape[0] >= 3:
        fit = ransac_wall_fit(xs, ys, rng, params.ransac_iterations, params.ransac_threshold)
        has_s = bool(fit.inliers[idx == 0].any())
        has_f = bool(fit.inliers[idx == 1].any())
        if has_s or has_f:
            return has_s and has_f
        keep = ~fit.inliers
        xs, ys, idx = xs[keep], ys[keep], idx[keep]
    # too few returns left to tell two walls apart
    return True


def is_aligned(r_s, r_f, params: WFParams) -> bool:
    """The side beam reads r_f*cos(beta): the wall runs parallel to the heading."""
    if r_s is OR or r_f is OR:
        return False
    return abs(r_s - r_f * math.cos(params.beta)) <= params.align_tol * r_f


def _aligned_on_wall(scan, side, params, rng) -> bool:
    r_s = scan.side(side)
    r_f = scan.front_of_side(side)
    return is_aligned(r_s, r_f, params) and same_wall(scan, side, params, rng)


def align_rate(r_s, r_f, side: int, params: WFParams) -> float:
    """Turn rate that holds ``d_ref`` while staying parallel to the wall."""
    away = side * params.c_w
    if r_s is OR:
        # wall lost on the side: look for it
        return -away
    try:
        d = perpendicular_distance(r_s, r_f, params.beta)
    except DegenerateTriangleError:
        return 0.0
    err = d - params.d_ref
    if abs(err) > params.t_d:
        return -away if err > 0 else away
    if abs(err) < params.t_d:
        # r_s longer than the projected front beam means converging on the wall
        return away if r_s > r_f * math.cos(params.beta) else -away
    return 0.0


def _corner_arcing(wf: WFState, r_s, params: WFParams) -> bool:
    if wf.mode is WFMode.ROTATE_AROUND_CORNER and wf.arcing:
        return True
    return r_s is OR or r_s >= 2.0 * params.d_ref


def side_hold_rate(r_s, side: int, params: WFParams) -> float:
    """Keep ``d_ref`` from the side beam alone, used while r_f is unusable."""
    if r_s is OR or abs(r_s - params.d_ref) <= params.t_d:
        return 0.0
    away = side * params.c_w
    return away if r_s < params.d_ref else -away


def wf_step(
    wf: WFState, scan: SensorScan, params: WFParams, rng: np.random.Generator, bumped: bool = False
):
    """One tick of the wall follower. Returns (v, w, new_state).

    ``bumped`` reports that the last translation was blocked by contact; the
    follower then stops and turns in place until it is aligned again.
    """
    side = wf.side
    r_s = scan.side(side)
    r_f = scan.front_of_side(side)
    mode = wf.mode
    arcing = False
    if mode is WFMode.ROTATE_TO_ALIGN_WALL:
        v, w = 0.0, side * params.c_w
        front = front_distance(scan, params)
        # aligning with the way ahead blocked would bounce straight back here
        blocked = front is not None and front < params.d_ref
        if not blocked and _aligned_on_wall(scan, side, params, rng):
            mode = WFMode.FOLLOW_AND_ALIGN
        # a corner needs a wall beside the robot to go around
        if not blocked and r_f is OR and r_s is not OR:
            mode = WFMode.ROTATE_AROUND_CORNER
    elif mode is WFMode.FOLLOW_AND_ALIGN:
        v = params.c_v
        # r_f out of range or reading a different wall than r_s
        lost = r_f is OR or not same_wall(scan, side, params, rng)
        w = side_hold_rate(r_s, side, params) if lost else align_rate(r_s, r_f, side, params)
        front = front_distance(scan, params)
        if front is not None and front < params.d_ref:
            mode = WFMode.ROTATE_TO_ALIGN_WALL
        if lost:
            mode = WFMode.ROTATE_AROUND_CORNER
    else:
        v = params.c_v
        arcing = _corner_arcing(wf, r_s, params)
        w = -side * v / params.d_ref if arcing else side_hold_rate(r_s, side, params)
        if _aligned_on_wall(scan, side, params, rng):
            mode = WFMode.FOLLOW_AND_ALIGN
        front = front_distance(scan, params)
        if front is not None and front < params.d_ref:
            mode = WFMode.ROTATE_TO_ALIGN_WALL
    if bumped and mode is not WFMode.ROTATE_TO_ALIGN_WALL:
        v, w = 0.0, side * params.c_w
        mode = WFMode.ROTATE_TO_ALIGN_WALL
    arcing = arcing and mode is WFMode.ROTATE_AROUND_CORNER
    if mode is wf.mode and arcing == wf.arcing:
        return v, w, wf
    return v, w, WFState(mode, side, arcing)
