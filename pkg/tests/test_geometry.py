import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curricar.errors import FarFromTrack, OffRoadOrigin
from curricar.geometry import (
    Arc,
    Segment,
    Track,
    TrackFrame,
    TrackKind,
    build_track,
    is_off_road,
    wrap_angle,
)

STRAIGHT = build_track(TrackKind.STRAIGHT)
UTURN = build_track(TrackKind.UTURN)
CIRCUIT = build_track(TrackKind.CIRCUIT)
ALL_TRACKS = (STRAIGHT, UTURN, CIRCUIT)


def dense_centerline(track, n=1_000_000):
    """Independent sampling oracle: n points along the centerline."""
    s = np.linspace(0.0, track.total_length, n, endpoint=not track.closed)
    pts = np.empty((n, 2))
    for i, si in enumerate(s):
        x, y, _ = track.point_at(float(si))
        pts[i] = (x, y)
    return s, pts


class TestWrapAngle:
    def test_half_open_interval(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(0.0) == 0.0

    @given(st.floats(-50.0, 50.0))
    @settings(max_examples=50, deadline=None)
    def test_range_and_equivalence(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi + 1e-12
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


class TestBuildTrack:
    def test_straight_is_one_kilometer(self):
        assert STRAIGHT.total_length == pytest.approx(1000.0)
        assert not STRAIGHT.closed

    def test_uturn_length_analytic(self):
        # sum of primitive lengths: 200 + pi * 30 + 200
        assert UTURN.total_length == pytest.approx(200.0 + math.pi * 30.0 + 200.0, abs=1e-9)

    def test_circuit_closes(self):
        assert CIRCUIT.closed
        ex, ey, _ = CIRCUIT.primitives[-1].end_pose()
        sx, sy, *_ = CIRCUIT.primitives[0].point_at(0.0)
        assert math.hypot(sx - ex, sy - ey) < 1e-6

    def test_circuit_composition(self):
        assert len(CIRCUIT.primitives) >= 8
        radii = [p.radius for p in CIRCUIT.primitives if isinstance(p, Arc)]
        sweeps = [p.sweep for p in CIRCUIT.primitives if isinstance(p, Arc)]
        assert all(25.0 <= r <= 80.0 for r in radii)
        assert any(s > 0 for s in sweeps) and any(s < 0 for s in sweeps)
        assert 1500.0 <= CIRCUIT.total_length <= 2500.0
        # alternating straights and arcs
        kinds = [isinstance(p, Arc) for p in CIRCUIT.primitives]
        assert all(a != b for a, b in zip(kinds, kinds[1:]))

    @pytest.mark.parametrize("track", ALL_TRACKS, ids=lambda t: t.kind.value)
    def test_width_and_arc_length_monotonicity(self, track):
        assert track.width == 10.0
        s0 = [p.s0 for p in track.primitives]
        assert all(b > a for a, b in zip(s0, s0[1:]))
        # arc-length additivity
        assert sum(p.length for p in track.primitives) == pytest.approx(
            track.total_length, abs=1e-9
        )

    @pytest.mark.parametrize("track", ALL_TRACKS, ids=lambda t: t.kind.value)
    def test_g1_continuity(self, track):
        for a, b in zip(track.primitives, track.primitives[1:]):
            _, _, h_end = a.end_pose()
            _, _, tx, ty = b.point_at(0.0)
            assert abs(wrap_angle(math.atan2(ty, tx) - h_end)) < 1e-9


class TestProject:
    def test_straight_identity(self):
        f = STRAIGHT.project(12.3, 1.5, 0.2)
        assert f.s == pytest.approx(12.3, abs=1e-12)
        assert f.d == pytest.approx(1.5, abs=1e-12)
        assert f.beta == pytest.approx(0.2, abs=1e-12)

    def test_on_centerline_zero(self):
        x, y, h = UTURN.point_at(137.0)
        f = UTURN.project(x, y, h)
        assert f.d == pytest.approx(0.0, abs=1e-9)
        assert f.beta == pytest.approx(0.0, abs=1e-9)
        assert f.s == pytest.approx(137.0, abs=1e-9)

    def test_right_side_is_negative(self):
        f = STRAIGHT.project(40.0, -2.5, 0.0)
        assert f.d == pytest.approx(-2.5, abs=1e-12)

    def test_uturn_arc_midpoint_against_dense_sampling(self):
        # arc midpoint, offset 2 m toward the turn center (the left side)
        x, y, h = UTURN.point_at(200.0 + math.pi * 15.0)
        cx, cy = 200.0, 30.0  # turn center by construction
        ux, uy = (cx - x) / 30.0, (cy - y) / 30.0
        px, py = x + 2.0 * ux, y + 2.0 * uy
        f = UTURN.project(px, py, h)

        _, pts = dense_centerline(UTURN)
        dists = np.hypot(pts[:, 0] - px, pts[:, 1] - py)
        assert abs(abs(f.d) - dists.min()) < 1e-4
        assert f.d == pytest.approx(2.0, abs=1e-9)  # left of travel on a left turn

    @pytest.mark.parametrize("track", ALL_TRACKS, ids=lambda t: t.kind.value)
    def test_projection_idempotent(self, track):
        rng = np.random.default_rng(7)
        for s in rng.uniform(0.0, track.total_length, size=25):
            x, y, h = track.point_at(float(s))
            f = track.project(x, y, h)
            x2, y2, _ = track.point_at(f.s)
            f2 = track.project(x2, y2, h)
            assert abs(f2.d) < 1e-9

    def test_s_range_on_closed_track(self):
        rng = np.random.default_rng(3)
        for s in rng.uniform(0.0, CIRCUIT.total_length, size=50):
            x, y, h = CIRCUIT.point_at(float(s))
            f = CIRCUIT.project(x, y, h)
            assert 0.0 <= f.s < CIRCUIT.total_length

    def test_far_point_rejected(self):
        with pytest.raises(FarFromTrack):
            STRAIGHT.project(500.0, 26.0, 0.0)  # 26 m > width/2 + 20

    def test_arc_center_resolves_to_arc_start(self):
        arc = Arc(cx=0.0, cy=0.0, radius=30.0, ang0=-0.5 * math.pi, sweep=math.pi, s0=0.0)
        dist, u, *_ = arc.project(0.0, 0.0)  # exactly at the arc center
        assert u == 0.0
        assert dist == pytest.approx(30.0)

    def test_overshoot_past_open_end_counts_as_offset(self):
        f = STRAIGHT.project(1010.0, 0.0, 0.0)  # 10 m past the end
        assert abs(f.d) == pytest.approx(10.0, abs=1e-9)
        assert is_off_road(f, STRAIGHT.width)


class TestIsOffRoad:
    def test_boundary_rule(self):
        assert is_off_road(TrackFrame(0.0, 5.01, 0.0), 10.0)
        assert not is_off_road(TrackFrame(0.0, -4.99, 0.0), 10.0)
        # the boundary itself is on-road
        assert not is_off_road(TrackFrame(0.0, 5.0, 0.0), 10.0)


class TestRayDistance:
    def test_perpendicular_is_half_width(self):
        assert STRAIGHT.ray_distance(50.0, 0.0, math.pi / 2, 200.0) == pytest.approx(5.0, abs=1e-12)
        assert STRAIGHT.ray_distance(50.0, 0.0, -math.pi / 2, 200.0) == pytest.approx(5.0, abs=1e-12)

    def test_sixty_degrees_analytic(self):
        # right triangle: hypotenuse to a wall 5 m away at 60 degrees off axis
        expect = 5.0 / math.sin(math.radians(60.0))
        got = STRAIGHT.ray_distance(50.0, 0.0, math.radians(60.0), 200.0)
        assert got == pytest.approx(expect, abs=1e-9)

    def test_parallel_ray_capped(self):
        assert STRAIGHT.ray_distance(50.0, 0.0, 0.0, 200.0) == pytest.approx(200.0)

    @given(st.floats(0.05, math.pi - 0.05))
    @settings(max_examples=40, deadline=None)
    def test_symmetry_on_straight(self, theta):
        left = STRAIGHT.ray_distance(300.0, 0.0, theta, 500.0)
        right = STRAIGHT.ray_distance(300.0, 0.0, -theta, 500.0)
        assert abs(left - right) < 1e-9

    @pytest.mark.parametrize("track", ALL_TRACKS, ids=lambda t: t.kind.value)
    def test_perpendicular_pair_sums_to_width(self, track):
        rng = np.random.default_rng(11)
        for s in rng.uniform(0.0, track.total_length, size=20):
            x, y, h = track.point_at(float(s))
            d = rng.uniform(-4.0, 4.0)
            px, py = x - d * math.sin(h), y + d * math.cos(h)
            left = track.ray_distance(px, py, h + math.pi / 2, 500.0)
            right = track.ray_distance(px, py, h - math.pi / 2, 500.0)
            assert left + right == pytest.approx(track.width, abs=1e-6)

    def test_off_road_origin_rejected(self):
        with pytest.raises(OffRoadOrigin):
            STRAIGHT.ray_distance(50.0, 7.0, 0.0, 200.0)

    def test_unvalidated_query_allowed_off_road(self):
        d = STRAIGHT.ray_distances(50.0, 7.0, np.array([-math.pi / 2]), 200.0, validate=False)
        assert d[0] == pytest.approx(2.0, abs=1e-9)  # back to the near boundary


class TestExport:
    @pytest.mark.parametrize("track", ALL_TRACKS, ids=lambda t: t.kind.value)
    def test_json_schema(self, track):
        doc = json.loads(track.to_json())
        assert set(doc) == {"kind", "width", "closed", "total_length", "primitives"}
        assert doc["kind"] == track.kind.value
        assert doc["width"] == 10.0
        assert len(doc["primitives"]) == len(track.primitives)
        for prim in doc["primitives"]:
            assert prim["type"] in ("segment", "arc")
            assert prim["length"] > 0.0
        lengths = sum(p["length"] for p in doc["primitives"])
        assert lengths == pytest.approx(doc["total_length"], abs=1e-9)


class TestPrimitives:
    def test_segment_projection_clamps(self):
        seg = Segment(x0=0.0, y0=0.0, heading=0.0, length=10.0)
        dist, u, qx, qy, _, _ = seg.project(-3.0, 4.0)
        assert (u, qx, qy) == (0.0, 0.0, 0.0)
        assert dist == pytest.approx(5.0)

    def test_arc_tie_break_prefers_smaller_s(self):
        # point in the gap of a 3/4 circle, equidistant from both ends
        arc = Arc(cx=0.0, cy=0.0, radius=10.0, ang0=0.0, sweep=1.5 * math.pi)
        dist, u, *_ = arc.project(10.0 * math.cos(-0.25 * math.pi), 10.0 * math.sin(-0.25 * math.pi))
        assert u == 0.0
