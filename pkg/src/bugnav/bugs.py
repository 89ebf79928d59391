"""Bug algorithms as explicit state machines.

All six controllers share four modes (forward, wall following, rotate to
target, change local direction) and delegate every wall-following tick to
:func:`bugnav.wallfollow.wf_step`. They differ only in what they remember
and in the condition that lets them leave the wall:

========  ===========================================================
wf        never leaves the wall (baseline)
com       leaves as soon as the way towards the target is free
com1      as com, and the target must be closer than at the hit point
bug2      leaves on the start-target line, closer than at the hit point
alg1      bug2 plus hit-point recall that reverses the following side
alg2      com1 plus the same recall; side resets to right on every hit
========  ===========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .geometry import OR, Segment, Vec2, crosses_m_line, normalize_angle
from .robot import SensorScan
from .wallfollow import WFMode, WFParams, WFState, wf_step


class Algorithm(str, Enum):
    WF = "wf"
    COM = "com"
    COM1 = "com1"
    BUG2 = "bug2"
    ALG1 = "alg1"
    ALG2 = "alg2"

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(a.value for a in cls)
            raise ValueError(f"unknown algorithm {name!r} (expected one of: {valid})") from None

    @property
    def uses_m_line(self) -> bool:
        return self in (Algorithm.BUG2, Algorithm.ALG1)

    @property
    def uses_hit_points(self) -> bool:
        return self in (Algorithm.ALG1, Algorithm.ALG2)

    @property
    def uses_d_ht(self) -> bool:
        return self in (Algorithm.COM1, Algorithm.ALG2)


ALGORITHMS = tuple(Algorithm)


class NavMode(Enum):
    FORWARD = "forward"
    WALL_FOLLOWING = "wall_following"
    ROTATE_TO_TARGET = "rotate_to_target"
    CHANGE_LOCAL_DIRECTION = "change_local_direction"


@dataclass(frozen=True)
class NavState:
    mode: NavMode = NavMode.FORWARD
    s_wf: int = 1
    d_h_t: float | None = None
    # estimated distance at the current hit, for the M-line leave rule
    d_hit: float | None = None
    hit_points: tuple = ()
    m_line: Segment | None = None
    wf: WFState = field(default_factory=WFState)
    rotation_accumulator: float = 0.0
    leave_count: int = 0
    reversal_count: int = 0

    @classmethod
    def initial(cls, algorithm: Algorithm, start=None, target=None) -> "NavState":
        m_line = None
        if algorithm.uses_m_line:
            if start is None or target is None:
                raise ValueError(f"{algorithm.value} needs start and target for its M-line")
            m_line = Segment(Vec2(*start), Vec2(*target))
        return cls(m_line=m_line)


@dataclass(frozen=True)
class TargetPercept:
    """What the robot believes about the target on this tick.

    ``bearing`` is relative to the current heading, computed from the
    estimated position. ``prev_position`` is the estimate one tick earlier,
    used for M-line crossing tests.
    """

    bearing: float
    est_distance: float
    path_free: bool
    est_position: Vec2 = Vec2(0.0, 0.0)
    prev_position: Vec2 = Vec2(0.0, 0.0)
    time: float = 0.0
    # contact on the previous tick (translation was blocked)
    bumped: bool = False


@dataclass(frozen=True)
class BugParams:
    wf: WFParams = WFParams()
    dt: float = 0.05
    free_cone: float = math.radians(5.0)
    # strip swept by the body on the way to the target; a narrower test lets
    # a corner just off the bearing re-trigger a hit right after leaving
    free_half_width: float = 0.3
    m_line_tol: float = 0.05
    # an M-line leave must improve on the hit distance by this much
    leave_margin: float = 0.5

    @property
    def hit_threshold(self) -> float:
        return self.wf.d_ref

    @property
    def heading_tol(self) -> float:
        # half a rotation step, so a sweep can never jump over the bearing
        return 0.5 * self.wf.c_w * self.dt + 1e-9


class NullRecognizer:
    """Recognizer for algorithms without hit-point memory."""

    def store(self, point, now):
        pass

    def query(self, est_pos, now, wall_following):
        return False


def detect_hit(scan: SensorScan, threshold: float) -> bool:
    """True when the closest finite wedge reading is strictly below ``threshold``."""
    return any(r is not OR and r < threshold for r in scan.wedge)


def path_to_target_free(
    scan: SensorScan,
    bearing: float,
    est_distance: float,
    cone: float = math.radians(5.0),
    half_width: float = 0.0,
) -> bool:
    """Nothing in range blocks the straight line towards the target.

    The bearing must fall inside the front wedge, and every wedge beam within
    ``cone`` of it must read at least min(est_distance, max_range). With
    ``half_width`` > 0 any return (side beams included) inside the strip of
    that half-width along the bearing, closer than the same limit, also
    blocks the way.
    """
    angles = scan.wedge_angles
    bearing = normalize_angle(bearing)
    if not min(angles) <= bearing <= max(angles):
        return False
    need = min(est_distance, scan.max_range)
    for r, a in zip(scan.wedge, angles):
        if abs(a - bearing) <= cone and r is not OR and r < need:
            return False
    if half_width > 0.0:
        # side beams included: a wall the robot is touching blocks a shallow departure
        for r, a in zip(scan.ranges, scan.beam_angles):
            if r is OR:
                continue
            rel = a - bearing
            along = r * math.cos(rel)
            if 0.0 < along < need and abs(r * math.sin(rel)) < half_width:
                return False
    return True


def _on_hit(alg: Algorithm, nav: NavState, percept: TargetPercept, recognizer) -> NavState:
    s_wf = 1 if alg is Algorithm.ALG2 else nav.s_wf
    d_h_t = percept.est_distance if alg.uses_d_ht else nav.d_h_t
    d_hit = percept.est_distance if alg.uses_m_line else nav.d_hit
    hit_points = nav.hit_points
    if alg.uses_hit_points:
        hit_points = hit_points + (percept.est_position,)
        recognizer.store(percept.est_position, percept.time)
    return replace(
        nav,
        mode=NavMode.WALL_FOLLOWING,
        s_wf=s_wf,
        d_h_t=d_h_t,
        d_hit=d_hit,
        hit_points=hit_points,
        wf=WFState(WFMode.ROTATE_TO_ALIGN_WALL, s_wf),
    )


def leave_condition(alg: Algorithm, nav: NavState, percept: TargetPercept, params: BugParams) -> bool:
    if alg is Algorithm.WF:
        return False
    if alg is Algorithm.COM:
        return percept.path_free
    if alg.uses_d_ht:
        return percept.path_free and percept.est_distance < nav.d_h_t
    # M-line rule
    return (
        percept.est_distance < nav.d_hit - params.leave_margin
        and crosses_m_line(percept.prev_position, percept.est_position, nav.m_line, params.m_line_tol)
    )


def bug_step(
    alg: Algorithm,
    nav: NavState,
    scan: SensorScan,
    percept: TargetPercept,
    recognizer=None,
    params: BugParams = BugParams(),
    rng: np.random.Generator | None = None,
):
    """One control tick. Returns (v, w, new_state).

    Within the wall-following branch a recall match is evaluated first and
    the leave rule second, so a leave wins when both fire on the same tick.
    """
    if recognizer is None:
        recognizer = NullRecognizer()
    if rng is None:
        rng = np.random.default_rng(0)
    wfp = params.wf
    mode = nav.mode

    if mode is NavMode.FORWARD:
        if percept.bumped or detect_hit(scan, params.hit_threshold):
            nav = _on_hit(alg, nav, percept, recognizer)
        return wfp.c_v, 0.0, nav

    if mode is NavMode.WALL_FOLLOWING:
        v, w, wf = wf_step(nav.wf, scan, wfp, rng, percept.bumped)
        nav = replace(nav, wf=wf) if wf is not nav.wf else nav
        if alg.uses_hit_points and recognizer.query(percept.est_position, percept.time, True):
            nav = replace(
                nav,
                mode=NavMode.CHANGE_LOCAL_DIRECTION,
                rotation_accumulator=0.0,
                reversal_count=nav.reversal_count + 1,
            )
        if leave_condition(alg, nav, percept, params):
            nav = replace(nav, mode=NavMode.ROTATE_TO_TARGET, leave_count=nav.leave_count + 1)
        return v, w, nav

    if mode is NavMode.ROTATE_TO_TARGET:
        bearing = normalize_angle(percept.bearing)
        if abs(bearing) <= params.heading_tol:
            return wfp.c_v, 0.0, replace(nav, mode=NavMode.FORWARD)
        return 0.0, math.copysign(wfp.c_w, bearing), nav

    # change of local direction: half a turn in place, then follow on the left
    w = wfp.c_w
    acc = nav.rotation_accumulator + abs(w) * params.dt
    if acc >= math.pi - 1e-9:
        return 0.0, w, replace(
            nav,
            mode=NavMode.WALL_FOLLOWING,
            s_wf=-1,
            rotation_accumulator=0.0,
            wf=WFState(WFMode.ROTATE_TO_ALIGN_WALL, -1),
        )
    return 0.0, w, replace(nav, s_wf=-1, rotation_accumulator=acc)
