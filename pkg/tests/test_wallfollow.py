import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bugnav.bugs import Algorithm
from bugnav.geometry import OR, Pose, Segment, Vec2
from bugnav.harness import EpisodeConfig, run_episode
from bugnav.robot import DEFAULT_RIG, RobotState, sense, step
from bugnav.wallfollow import (
    DegenerateTriangleError,
    InsufficientPointsError,
    WFMode,
    WFParams,
    WFState,
    perpendicular_distance,
    ransac_wall_fit,
    same_wall,
    wf_step,
)

from fixtures import MIRRORED_G, env_from_picture

P = WFParams()
BETA = math.pi / 3


def seg(ax, ay, bx, by):
    return Segment(Vec2(ax, ay), Vec2(bx, by))


def right_wall(d, tilt=0.0, length=20.0):
    """Straight wall on the right of a robot at the origin facing +x.

    ``tilt`` > 0 turns the wall towards the robot ahead (converging).
    """
    ux, uy = math.cos(tilt), math.sin(tilt)
    return [seg(-length * ux, -d - length * uy, length * ux, -d + length * uy)]


def scan_at(walls, pose=Pose.at(0, 0, 0)):
    return sense(pose, DEFAULT_RIG, walls)


class TestPerpendicularDistance:
    def test_parallel_wall(self):
        # side beam 0.5, the -30 degree beam meets the same wall at 1.0
        assert perpendicular_distance(0.5, 1.0, BETA) == pytest.approx(0.5)

    def test_right_angle(self):
        assert perpendicular_distance(3.0, 4.0, math.pi / 2) == pytest.approx(2.4)

    def test_degenerate(self):
        with pytest.raises(DegenerateTriangleError):
            perpendicular_distance(1.0, 1.0, 1e-12)

    def test_out_of_range_reading(self):
        with pytest.raises(TypeError):
            perpendicular_distance(OR, 1.0, BETA)

    @settings(max_examples=200)
    @given(st.floats(0.2, 1.5), st.floats(-0.5, 0.5))
    def test_cartesian_oracle(self, d, tilt):
        """Two beams ending on one line give the origin-to-line distance."""
        # line n . p = -d with unit normal n = (sin tilt, -cos tilt) rotated into place
        nx, ny = -math.sin(tilt), math.cos(tilt)
        a_s, a_f = -math.pi / 2, -math.pi / 6

        def hit(a):
            denom = nx * math.cos(a) + ny * math.sin(a)
            return -d / denom

        r_s, r_f = hit(a_s), hit(a_f)
        if r_s <= 0 or r_f <= 0:
            return
        assert perpendicular_distance(r_s, r_f, BETA) == pytest.approx(d, rel=1e-9)


class TestRansac:
    def test_points_on_a_line(self):
        rng = np.random.default_rng(0)
        x = np.linspace(0.2, 1.5, 12)
        y = 0.5 * x - 0.4
        fit = ransac_wall_fit(x, y, rng)
        assert fit.angle == pytest.approx(math.atan(0.5), abs=1e-9)
        assert fit.distance == pytest.approx(0.4 / math.hypot(1, 0.5), abs=1e-9)
        assert fit.inliers.all()

    def test_outliers_rejected(self):
        rng = np.random.default_rng(1)
        x = np.linspace(0.2, 1.5, 12)
        y = np.full_like(x, -0.5)
        x = np.append(x, [0.5, 0.9, 1.1])
        y = np.append(y, [0.6, 0.3, 1.0])
        fit = ransac_wall_fit(x, y, rng)
        assert fit.inliers.sum() == 12
        assert fit.distance == pytest.approx(0.5, abs=1e-9)
        assert fit.angle == pytest.approx(0.0, abs=1e-9)

    def test_two_points(self):
        fit = ransac_wall_fit([0, 1], [1, 1], np.random.default_rng(0))
        assert fit.distance == pytest.approx(1.0)

    def test_too_few_points(self):
        with pytest.raises(InsufficientPointsError):
            ransac_wall_fit([1.0], [1.0], np.random.default_rng(0))

    def test_same_wall_straight(self):
        assert same_wall(scan_at(right_wall(0.5)), 1, P, np.random.default_rng(0))

    def test_same_wall_two_walls(self):
        # side beam on a near wall that ends, front beam on a far wall behind it
        walls = [seg(-3, -0.5, 0.1, -0.5), seg(0.1, -1.0, 4, -1.0)]
        assert not same_wall(scan_at(walls), 1, P, np.random.default_rng(0))


FOLLOW = WFState(WFMode.FOLLOW_AND_ALIGN, 1)


class TestStep:
    def test_parallel_at_reference_keeps_driving(self):
        v, w, s = wf_step(FOLLOW, scan_at(right_wall(0.5)), P, np.random.default_rng(0))
        assert v == P.c_v
        assert abs(w) in (0.0, P.c_w)
        assert s.mode is WFMode.FOLLOW_AND_ALIGN

    @pytest.mark.parametrize("d,sign", [(0.8, -1), (0.3, +1)])
    def test_distance_error_steers(self, d, sign):
        # too far: turn towards the right wall (clockwise); too close: away
        _, w, _ = wf_step(FOLLOW, scan_at(right_wall(d)), P, np.random.default_rng(0))
        assert w == sign * P.c_w

    @pytest.mark.parametrize("tilt,sign", [(0.15, +1), (-0.15, -1)])
    def test_within_band_follows_wall_direction(self, tilt, sign):
        _, w, _ = wf_step(FOLLOW, scan_at(right_wall(0.5, tilt)), P, np.random.default_rng(0))
        assert w == sign * P.c_w

    def test_front_out_of_range_starts_corner(self):
        # the wall ends just behind the side beam, so r_f sees nothing
        walls = [seg(-5, -0.5, 0.05, -0.5)]
        scan = scan_at(walls)
        assert scan.front_of_side(1) is OR
        v, w, s = wf_step(FOLLOW, scan, P, np.random.default_rng(0))
        assert s.mode is WFMode.ROTATE_AROUND_CORNER
        assert v == P.c_v

    def test_corner_arc_rate(self):
        scan = scan_at([])
        corner = WFState(WFMode.ROTATE_AROUND_CORNER, 1, arcing=True)
        v, w, s = wf_step(corner, scan, P, np.random.default_rng(0))
        assert (v, w) == (P.c_v, -P.c_v / P.d_ref)

    def test_wall_ahead_rotates(self):
        walls = right_wall(0.5) + [seg(0.4, -3, 0.4, 3)]
        scan = scan_at(walls)
        rng = np.random.default_rng(0)
        # r_f lands on the front wall, so the first tick reads as a lost wall
        _, _, s = wf_step(FOLLOW, scan, P, rng)
        assert s.mode is WFMode.ROTATE_AROUND_CORNER
        v, w, s = wf_step(s, scan, P, rng)
        assert s.mode is WFMode.ROTATE_TO_ALIGN_WALL

    def test_rotate_turns_away_from_wall(self):
        start = WFState(WFMode.ROTATE_TO_ALIGN_WALL, 1)
        walls = [seg(0.5, -3, 0.5, 3)]
        v, w, s = wf_step(start, scan_at(walls), P, np.random.default_rng(0))
        assert (v, w) == (0.0, P.c_w)

    def test_bump_forces_rotation(self):
        v, w, s = wf_step(FOLLOW, scan_at(right_wall(0.5)), P, np.random.default_rng(0), bumped=True)
        assert (v, w, s.mode) == (0.0, P.c_w, WFMode.ROTATE_TO_ALIGN_WALL)

    @settings(max_examples=150, deadline=None)
    @given(
        st.sampled_from(list(WFMode)),
        st.sampled_from([1, -1]),
        st.floats(0.2, 1.5),
        st.floats(-0.6, 0.6),
        st.floats(-2, 2),
        st.integers(0, 2**31),
    )
    def test_commands_in_allowed_set_and_mirror(self, mode, side, d, tilt, wall_end, seed):
        walls = [seg(-5, -d, wall_end, -d + (wall_end + 5) * math.tan(tilt))]
        scan = scan_at(walls)
        state = WFState(mode, side, arcing=False)
        v, w, s = wf_step(state, scan, P, np.random.default_rng(seed))
        allowed = {0.0, P.c_w, -P.c_w, P.c_v / P.d_ref, -P.c_v / P.d_ref}
        assert v in (0.0, P.c_v)
        assert w in allowed
        mv, mw, ms = wf_step(WFState(mode, -side), scan.mirrored(), P, np.random.default_rng(seed))
        assert (mv, mw, ms.mode, ms.arcing) == (v, -w, s.mode, s.arcing)


def test_straight_wall_closed_loop_holds_reference():
    walls = [seg(-1, -0.8, 60, -0.8)]
    state = RobotState.at(Pose.at(0, 0, 0.3))
    wf = WFState(WFMode.ROTATE_TO_ALIGN_WALL, 1)
    rng = np.random.default_rng(0)
    gaps, headings = [], []
    for k in range(800):
        scan = sense(state.true_pose, DEFAULT_RIG, walls)
        v, w, wf = wf_step(wf, scan, P, rng, state.blocked)
        state = step(state, v, w, 0.05, walls)
        if k > 300:
            gaps.append(state.true_pose.position.y + 0.8)
            headings.append(state.true_pose.heading)
    gaps = np.array(gaps)
    assert state.true_pose.position.x > 10
    # inside the dead band the law only aligns, so the gap may sit at its edge
    assert np.all(np.abs(gaps - P.d_ref) < P.t_d + 0.02)
    assert np.max(np.abs(headings)) < 0.15


def test_mirrored_g_loop_closes():
    """WF around the G-shaped wall returns to where it first reached the wall."""
    env = env_from_picture(MIRRORED_G)
    res = run_episode(EpisodeConfig(Algorithm.WF, env, time_limit=200.0, record_trace=True))
    assert not res.success
    trace = np.array([(t, x, y) for t, x, y, _, mode in res.trace])
    modes = [row[4] for row in res.trace]
    first = modes.index("wall_following")
    p0 = trace[first, 1:]
    d = np.hypot(trace[:, 1] - p0[0], trace[:, 2] - p0[1])
    away = np.nonzero(d > 2.0)[0]
    assert away.size, "never left the first contact point"
    later = d[away[0]:]
    assert later.min() < 0.05
    # the loop is a full lap of the G, well over 20 m
    assert res.path_length > 20
