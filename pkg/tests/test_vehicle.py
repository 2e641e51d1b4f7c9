import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curricar.errors import CalibrationFailure, NonFiniteState
from curricar.vehicle import (
    BRAKING_REFERENCE_M,
    BRAKING_REFERENCE_SPEED,
    KMH,
    Control,
    VehicleParams,
    VehicleState,
    Weather,
    brake_decel_from_reference,
    braking_distance,
    calibrate,
    step,
)

PARAMS = VehicleParams()
V80 = 80.0 * KMH


def circumradius(p1, p2, p3):
    """Radius of the circle through three points (the turning-circle oracle)."""
    a = math.dist(p2, p3)
    b = math.dist(p1, p3)
    c = math.dist(p1, p2)
    area = 0.5 * abs(
        (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1])
    )
    return a * b * c / (4.0 * area)


class TestWeather:
    def test_friction_constants(self):
        assert Weather.CLEAR.friction == 0.8
        assert Weather.RAINY.friction == 0.4
        assert Weather.SNOWY.friction == 0.28

    def test_grip_ratios_exact(self):
        assert Weather.CLEAR.grip_scale == 1.0
        assert Weather.RAINY.grip_scale == 0.5
        assert Weather.SNOWY.grip_scale == 0.35


class TestParams:
    def test_default_decels_match_closed_form(self):
        # a = v0^2 / (2 d) for each reference distance
        expect = {w: V80**2 / (2.0 * d) for w, d in BRAKING_REFERENCE_M.items()}
        for w in Weather:
            assert PARAMS.brake_decel_by_weather[w] == pytest.approx(expect[w], rel=1e-12)
        assert expect[Weather.CLEAR] == pytest.approx(3.0673, abs=5e-4)
        assert expect[Weather.RAINY] == pytest.approx(2.9360, abs=5e-4)
        assert expect[Weather.SNOWY] == pytest.approx(2.7134, abs=5e-4)

    def test_decels_strictly_decreasing(self):
        d = PARAMS.brake_decel_by_weather
        assert d[Weather.CLEAR] > d[Weather.RAINY] > d[Weather.SNOWY] > 0

    def test_bad_decels_rejected(self):
        bad = dict(brake_decel_from_reference())
        bad[Weather.SNOWY] = bad[Weather.CLEAR] + 1.0
        with pytest.raises(ValueError):
            VehicleParams(brake_decel_by_weather=bad)

    def test_drag_balances_at_top_speed(self):
        assert PARAMS.drag_coeff * PARAMS.top_speed**2 == pytest.approx(PARAMS.max_engine_accel)

    def test_control_clamped(self):
        c = Control(steer=4.2, throttle_brake=-9.0)
        assert c.steer == 1.0
        assert c.throttle_brake == -1.0


class TestStep:
    def test_rest_is_a_fixed_point(self):
        s0 = VehicleState()
        s1 = step(s0, Control(), Weather.CLEAR, PARAMS, dt=0.05)
        for name in ("x", "y", "heading", "vx", "vy", "yaw_rate"):
            assert abs(getattr(s1, name) - getattr(s0, name)) < 1e-12

    def test_deterministic_bitwise(self):
        s = VehicleState(vx=17.0)
        u = Control(steer=0.3, throttle_brake=0.6)
        a = step(s, u, Weather.RAINY, PARAMS, dt=0.05)
        b = step(s, u, Weather.RAINY, PARAMS, dt=0.05)
        assert a == b

    def test_snowy_turns_wider_than_clear(self):
        # circumscribed-circle oracle over matching 100-step trajectories
        radii = {}
        for w in (Weather.CLEAR, Weather.SNOWY):
            s = VehicleState(vx=10.0)
            pts = [(s.x, s.y)]
            for _ in range(100):
                s = step(s, Control(steer=0.5, throttle_brake=0.0), w, PARAMS, dt=0.05)
                pts.append((s.x, s.y))
            radii[w] = circumradius(pts[0], pts[50], pts[100])
        assert radii[Weather.SNOWY] > radii[Weather.CLEAR]

    def test_lateral_accel_monotone_in_grip(self):
        # same maneuver, peak |lateral accel| ordered snowy <= rainy <= clear
        peaks = {}
        for w in Weather:
            s = VehicleState(vx=20.0)
            peak = 0.0
            for _ in range(60):
                s = step(s, Control(steer=0.8, throttle_brake=0.0), w, PARAMS, dt=0.05)
                peak = max(peak, abs(s.yaw_rate * s.vx))
            peaks[w] = peak
        assert peaks[Weather.SNOWY] <= peaks[Weather.RAINY] <= peaks[Weather.CLEAR]

    @given(st.floats(0.0, 41.0), st.floats(-1.0, 1.0), st.sampled_from(list(Weather)))
    @settings(max_examples=40, deadline=None)
    def test_zero_throttle_never_speeds_up(self, vx, steer, weather):
        s = VehicleState(vx=vx)
        speeds = [s.speed]
        for _ in range(30):
            s = step(s, Control(steer=steer, throttle_brake=0.0), weather, PARAMS, dt=0.05)
            speeds.append(s.speed)
        assert all(b <= a + 1e-9 for a, b in zip(speeds, speeds[1:]))

    def test_vx_clamped_to_top_speed(self):
        s = VehicleState(vx=PARAMS.top_speed)
        for _ in range(50):
            s = step(s, Control(throttle_brake=1.0), Weather.CLEAR, PARAMS, dt=0.05)
        assert s.vx <= PARAMS.top_speed + 1e-12

    def test_no_reverse(self):
        s = VehicleState(vx=0.5)
        for _ in range(50):
            s = step(s, Control(throttle_brake=-1.0), Weather.CLEAR, PARAMS, dt=0.05)
        assert s.vx == 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteState):
            step(VehicleState(vx=float("nan")), Control(), Weather.CLEAR, PARAMS, dt=0.05)

    def test_skid_produces_lateral_velocity(self):
        s = VehicleState(vx=30.0)
        s = step(s, Control(steer=1.0, throttle_brake=0.0), Weather.SNOWY, PARAMS, dt=0.05)
        assert s.vy < 0.0  # left-turn understeer slides the body to the right


class TestBrakingDistance:
    @pytest.mark.parametrize("weather", list(Weather), ids=lambda w: w.value)
    def test_reference_distances_within_one_percent(self, weather):
        d = braking_distance(V80, weather, PARAMS, dt=0.01)
        assert d == pytest.approx(BRAKING_REFERENCE_M[weather], rel=0.01)

    def test_ordering_clear_rainy_snowy(self):
        d = {w: braking_distance(V80, w, PARAMS, dt=0.01) for w in Weather}
        assert d[Weather.CLEAR] < d[Weather.RAINY] < d[Weather.SNOWY]

    def test_matches_v2_over_2a(self):
        # constant-decel closed form; discrete integration error O(dt^2)
        for w in Weather:
            a = PARAMS.brake_decel_by_weather[w]
            for v0 in (10.0, V80, 35.0):
                d = braking_distance(v0, w, PARAMS, dt=0.005)
                assert d == pytest.approx(v0**2 / (2.0 * a), rel=1e-3)

    def test_step_size_refinement(self):
        coarse = braking_distance(BRAKING_REFERENCE_SPEED, Weather.CLEAR, PARAMS, dt=0.05)
        fine = braking_distance(BRAKING_REFERENCE_SPEED, Weather.CLEAR, PARAMS, dt=0.001)
        assert abs(coarse - fine) < 0.5


class TestCalibrate:
    def test_default_params_within_one_percent(self):
        report = calibrate(PARAMS, dt=0.01)
        assert report.max_rel_error < 0.01
        for row in report.rows:
            assert row.reference_m == BRAKING_REFERENCE_M[row.weather]

    def test_closed_form_decels_fine_dt(self):
        report = calibrate(PARAMS, dt=0.001)
        assert report.max_rel_error < 0.005

    def test_report_table_contents(self):
        table = calibrate(PARAMS).format_table()
        for needle in ("80.5", "84.1", "91.0", "1.00", "0.50", "0.35"):
            assert needle in table

    def test_sabotaged_brakes_fail(self):
        decels = dict(brake_decel_from_reference())
        decels = {w: a * 0.8 for w, a in decels.items()}
        bad = VehicleParams(brake_decel_by_weather=decels)
        with pytest.raises(CalibrationFailure) as exc_info:
            calibrate(bad)
        assert exc_info.value.report is not None
        assert exc_info.value.report.max_rel_error > 0.02
