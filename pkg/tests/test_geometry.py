import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import LineString, Point

from bugnav.geometry import (
    OR,
    Pose,
    Segment,
    Vec2,
    cast_rays,
    crosses_m_line,
    make_segment,
    min_wall_distance,
    normalize_angle,
    ray_cast,
    segment_distance,
    segments_to_array,
)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def seg(ax, ay, bx, by):
    return Segment(Vec2(ax, ay), Vec2(bx, by))


WALL_X1 = seg(1, -1, 1, 1)


class TestRayCast:
    def test_perpendicular_hit(self):
        assert ray_cast(Vec2(0, 0), 0.0, [WALL_X1], 2.0) == pytest.approx(1.0, abs=1e-12)

    def test_empty_world_is_out_of_range(self):
        assert ray_cast(Vec2(0, 0), 0.0, [], 2.0) is OR

    def test_oblique_hit(self):
        # x = 1 reached at t cos(pi/4) = 1
        r = ray_cast(Vec2(0, 0), math.pi / 4, [WALL_X1], 2.0)
        assert r == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_beyond_max_range(self):
        assert ray_cast(Vec2(0, 0), 0.0, [seg(3, -1, 3, 1)], 2.0) is OR

    def test_exactly_max_range_is_out_of_range(self):
        assert ray_cast(Vec2(0, 0), 0.0, [seg(2, -1, 2, 1)], 2.0) is OR

    def test_nearest_of_two(self):
        walls = [seg(1.5, -1, 1.5, 1), WALL_X1]
        assert ray_cast(Vec2(0, 0), 0.0, walls, 2.0) == pytest.approx(1.0)

    def test_behind_is_ignored(self):
        assert ray_cast(Vec2(0, 0), math.pi, [WALL_X1], 2.0) is OR

    def test_parallel_wall_is_missed(self):
        assert ray_cast(Vec2(0, 0), 0.0, [seg(0, 0, 1, 0)], 2.0) is OR

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_rejects_nonpositive_range(self, bad):
        with pytest.raises(ValueError):
            ray_cast(Vec2(0, 0), 0.0, [WALL_X1], bad)

    def test_or_has_no_arithmetic(self):
        with pytest.raises(TypeError):
            OR + 1.0
        with pytest.raises(TypeError):
            OR < 1.0


def _shapely_range(origin, direction, walls, max_range):
    """Independent oracle: clip the beam with shapely and take the nearest hit."""
    end = (origin[0] + max_range * math.cos(direction), origin[1] + max_range * math.sin(direction))
    beam = LineString([origin, end])
    best = math.inf
    for s in walls:
        hit = beam.intersection(LineString([s.a, s.b]))
        if hit.is_empty or hit.geom_type != "Point":
            continue
        best = min(best, Point(origin).distance(hit))
    return best


def test_ray_cast_matches_shapely_on_random_scenes():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(300):
        walls = [seg(*rng.uniform(-3, 3, 4)) for _ in range(8)]
        origin = tuple(rng.uniform(-1, 1, 2))
        direction = float(rng.uniform(-math.pi, math.pi))
        got = ray_cast(origin, direction, walls, 2.0)
        want = _shapely_range(origin, direction, walls, 2.0)
        if want >= 2.0:
            assert got is OR
        else:
            assert got == pytest.approx(want, abs=1e-9)
            assert 0.0 <= got < 2.0
            checked += 1
    assert checked > 50


def test_batched_kernel_matches_reference():
    rng = np.random.default_rng(11)
    walls = [seg(*rng.uniform(-3, 3, 4)) for _ in range(12)]
    arr = segments_to_array(walls)
    angles = np.linspace(-math.pi, math.pi, 181, endpoint=False)
    for _ in range(20):
        ox, oy = rng.uniform(-1, 1, 2)
        batch = cast_rays(ox, oy, angles, arr, 2.0)
        for a, b in zip(angles, batch):
            ref = ray_cast((ox, oy), float(a), walls, 2.0)
            if ref is OR:
                assert b == np.inf
            else:
                assert b == pytest.approx(ref, abs=1e-12)


class TestSegmentDistance:
    S = seg(-1, 0, 1, 0)

    def test_above_middle(self):
        assert segment_distance(Vec2(0, 1), self.S) == 1.0

    def test_endpoint_nearest(self):
        assert segment_distance(Vec2(2, 0), self.S) == 1.0

    def test_dense_sampling_oracle(self):
        s = seg(0, 0, 1, 1)
        t = np.linspace(0.0, 1.0, 1_000_001)
        brute = np.min(np.hypot(t - 0.3, t - 0.7))
        assert segment_distance(Vec2(0.3, 0.7), s) == pytest.approx(brute, abs=1e-9)

    @given(coord, coord, coord, coord, coord, coord)
    def test_agrees_with_shapely(self, px, py, ax, ay, bx, by):
        if math.hypot(bx - ax, by - ay) < 1e-6:
            return
        s = seg(ax, ay, bx, by)
        want = Point(px, py).distance(LineString([(ax, ay), (bx, by)]))
        assert segment_distance(Vec2(px, py), s) == pytest.approx(want, abs=1e-9)

    def test_batched_min_distance(self):
        walls = [seg(-1, 0, 1, 0), seg(3, -1, 3, 1)]
        d = min_wall_distance(2.5, 0.0, segments_to_array(walls))
        assert d == pytest.approx(0.5)


class TestMLine:
    M = seg(-5, 0, 5, 0)

    def test_sign_change_crosses(self):
        assert crosses_m_line(Vec2(0, -0.1), Vec2(0, 0.1), self.M, 0.05)

    def test_approaching_but_far(self):
        assert not crosses_m_line(Vec2(0, 1), Vec2(0, 0.5), self.M, 0.05)

    def test_grazing_end_exactly_at_tol(self):
        # 0.25 is exact in binary, so the distance is exactly the tolerance
        assert crosses_m_line(Vec2(0, 1), Vec2(0, 0.25), self.M, 0.25)

    def test_past_the_end_does_not_count(self):
        assert not crosses_m_line(Vec2(6, -1), Vec2(6, 1), self.M, 0.05)

    @given(coord, coord, coord, coord)
    def test_symmetric(self, ax, ay, bx, by):
        a, b = Vec2(ax, ay), Vec2(bx, by)
        assert crosses_m_line(a, b, self.M) == crosses_m_line(b, a, self.M)


class TestAngles:
    @pytest.mark.parametrize(
        "raw,want",
        [(0.0, 0.0), (math.pi, -math.pi), (-math.pi, -math.pi), (3 * math.pi / 2, -math.pi / 2), (7.0, 7.0 - 2 * math.pi)],
    )
    def test_normalize(self, raw, want):
        assert normalize_angle(raw) == pytest.approx(want, abs=1e-12)

    @given(st.floats(-1e4, 1e4, allow_nan=False))
    def test_half_open_range(self, a):
        n = normalize_angle(a)
        assert -math.pi <= n < math.pi
        assert math.isclose(math.cos(n), math.cos(a), abs_tol=1e-6)

    def test_pose_normalizes_heading(self):
        assert Pose.at(0, 0, 2 * math.pi).heading == pytest.approx(0.0, abs=1e-12)


def test_degenerate_segment_rejected():
    with pytest.raises(ValueError):
        make_segment(1, 1, 1, 1)
