"""Unicycle robot with a 22-beam range rig (20-beam front wedge + 2 side beams)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .geometry import OR, Pose, Vec2, cast_rays, min_wall_distance, normalize_angle, segments_to_array

BODY_RADIUS = 0.17


@dataclass(frozen=True)
class SensorRig:
    n_front: int = 20
    wedge_half_angle: float = math.radians(30.0)
    side_angle: float = math.radians(90.0)
    max_range: float = 2.0

    @property
    def front_beams(self) -> np.ndarray:
        return np.linspace(-self.wedge_half_angle, self.wedge_half_angle, self.n_front)

    @property
    def beam_angles(self) -> np.ndarray:
        """Body-frame beam angles: right side, wedge right-to-left, left side."""
        return np.concatenate(([-self.side_angle], self.front_beams, [self.side_angle]))

    @cached_property
    def _angles(self):
        a = self.beam_angles
        a.flags.writeable = False
        return a, tuple(float(x) for x in a)

    @property
    def beta(self) -> float:
        """Angle between a side beam and its nearest wedge beam."""
        return self.side_angle - self.wedge_half_angle

    @property
    def n_beams(self) -> int:
        return self.n_front + 2


DEFAULT_RIG = SensorRig()


@dataclass(frozen=True)
class SensorScan:
    """One reading per beam; ``OR`` where the beam saw nothing in range.

    Index 0 is the right side beam, 1..n_front the wedge from right to left,
    and the last index the left side beam.
    """

    ranges: tuple
    beam_angles: tuple
    max_range: float = 2.0

    @property
    def n_front(self) -> int:
        return len(self.ranges) - 2

    @property
    def right(self):
        return self.ranges[0]

    @property
    def left(self):
        return self.ranges[-1]

    @property
    def wedge(self) -> tuple:
        return self.ranges[1:-1]

    @property
    def wedge_angles(self) -> tuple:
        return self.beam_angles[1:-1]

    def side(self, s_wf: int):
        """Side beam on the wall-following side (+1 right, -1 left)."""
        return self.ranges[0] if s_wf == 1 else self.ranges[-1]

    def front_of_side(self, s_wf: int):
        """Wedge beam nearest to the side beam on the ``s_wf`` side."""
        return self.ranges[1] if s_wf == 1 else self.ranges[-2]

    def mirrored(self) -> "SensorScan":
        return SensorScan(
            tuple(reversed(self.ranges)), tuple(-a for a in reversed(self.beam_angles)), self.max_range
        )

    def finite_wedge_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Body-frame (x forward, y left) endpoints of the finite wedge beams."""
        rs, angs = [], []
        for r, a in zip(self.wedge, self.wedge_angles):
            if r is not OR:
                rs.append(r)
                angs.append(a)
        r = np.asarray(rs, dtype=float)
        a = np.asarray(angs, dtype=float)
        return r * np.cos(a), r * np.sin(a)


@dataclass(frozen=True)
class RobotState:
    true_pose: Pose
    est_position: Vec2
    est_heading: float
    v_cmd: float = 0.0
    w_cmd: float = 0.0
    clock: float = 0.0
    tick: int = 0
    # the last commanded translation was cancelled by contact
    blocked: bool = False

    @classmethod
    def at(cls, pose: Pose) -> "RobotState":
        return cls(pose, pose.position, pose.heading)


def _wall_array(walls) -> np.ndarray:
    if isinstance(walls, np.ndarray):
        return walls
    if len(walls) == 0:
        return np.empty((0, 4))
    return segments_to_array(walls)


def integrate_odometry(est, measured_velocity) -> Vec2:
    """One odometry update: est + measured per-tick displacement."""
    return Vec2(est[0] + measured_velocity[0], est[1] + measured_velocity[1])


def step(
    state: RobotState,
    v: float,
    w: float,
    dt: float,
    walls,
    body_radius: float = BODY_RADIUS,
    measure: Callable[[Vec2], Vec2] | None = None,
) -> RobotState:
    """Advance one control tick.

    Heading turns first, then the robot translates along the new heading.
    A translation that would bring the body closer than ``body_radius`` to a
    wall is dropped; the rotation still happens. ``measure`` maps the true
    per-tick displacement to the odometry sample; identity when omitted.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    seg = _wall_array(walls)
    pos = state.true_pose.position
    heading = normalize_angle(state.true_pose.heading + w * dt)
    dx = v * dt * math.cos(heading)
    dy = v * dt * math.sin(heading)
    blocked = False
    if dx != 0.0 or dy != 0.0:
        nx, ny = pos.x + dx, pos.y + dy
        if seg.shape[0] and min_wall_distance(nx, ny, seg) < body_radius:
            dx = dy = 0.0
            new_pos = pos
            blocked = True
        else:
            new_pos = Vec2(nx, ny)
    else:
        new_pos = pos
    displacement = Vec2(dx, dy)
    sample = displacement if measure is None else measure(displacement)
    est = integrate_odometry(state.est_position, sample)
    tick = state.tick + 1
    return RobotState(
        true_pose=Pose(new_pos, heading),
        est_position=est,
        est_heading=heading,
        v_cmd=v,
        w_cmd=w,
        clock=tick * dt,
        tick=tick,
        blocked=blocked,
    )


def sense(pose: Pose, rig: SensorRig, walls) -> SensorScan:
    seg = _wall_array(walls)
    angles, angle_tuple = rig._angles
    if seg.shape[0] == 0:
        raw = np.full(angles.shape, np.inf)
    else:
        raw = cast_rays(pose.position.x, pose.position.y, angles + pose.heading, seg, rig.max_range)
    ranges = tuple(OR if r == math.inf else r for r in raw.tolist())
    return SensorScan(ranges, angle_tuple, rig.max_range)
