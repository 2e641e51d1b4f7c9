"""Single-vehicle planar dynamics with weather-dependent grip.

The model is a kinematic bicycle with two weather channels calibrated
against reference braking behavior:

- braking deceleration per weather, derived in closed form from the
  reference stopping distances at 80 km/h (a = v0^2 / (2 d)),
- a lateral-acceleration ceiling scaled by the weather grip ratio; steering
  demand beyond the ceiling is discarded (understeer) and bleeds into a
  decaying lateral body velocity.

Velocities integrate semi-implicitly; the pose advances with the average of
old and new velocities at the half-step heading, which keeps stopping
distances stable across time steps from 1 ms to 50 ms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import CalibrationFailure, NonFiniteState

KMH = 1.0 / 3.6  # km/h -> m/s


class Weather(enum.Enum):
    CLEAR = "clear"
    RAINY = "rainy"
    SNOWY = "snowy"

    @property
    def friction(self) -> float:
        return _FRICTION[self]

    @property
    def grip_scale(self) -> float:
        """Friction normalized by the dry value, as exact constants."""
        return _GRIP[self]


_FRICTION = {Weather.CLEAR: 0.8, Weather.RAINY: 0.4, Weather.SNOWY: 0.28}
# friction / 0.8, pinned exactly rather than recomputed (0.28 / 0.8 rounds off)
_GRIP = {Weather.CLEAR: 1.0, Weather.RAINY: 0.5, Weather.SNOWY: 0.35}

# Reference full-brake stopping distances from 80 km/h, meters.
BRAKING_REFERENCE_M = {Weather.CLEAR: 80.5, Weather.RAINY: 84.1, Weather.SNOWY: 91.0}
BRAKING_REFERENCE_SPEED = 80.0 * KMH


def brake_decel_from_reference() -> dict[Weather, float]:
    """Constant decelerations that stop from 80 km/h in the reference distances."""
    v0 = BRAKING_REFERENCE_SPEED
    return {w: v0 * v0 / (2.0 * d) for w, d in BRAKING_REFERENCE_M.items()}


@dataclass(frozen=True)
class VehicleParams:
    """Plant parameters. Defaults are typical sedan figures.

    drag_coeff defaults so that top_speed is the asymptotic full-throttle
    speed in clear weather (engine accel balances v^2 drag there).
    """

    wheelbase: float = 2.8
    max_steer_angle: float = 0.52
    max_engine_accel: float = 4.0
    max_lateral_accel_dry: float = 7.85
    top_speed: float = 150.0 * KMH
    drag_coeff: float | None = None
    brake_decel_by_weather: dict[Weather, float] = field(default_factory=brake_decel_from_reference)
    vy_decay_time: float = 0.5

    def __post_init__(self):
        if self.drag_coeff is None:
            object.__setattr__(self, "drag_coeff", self.max_engine_accel / self.top_speed**2)
        decels = [self.brake_decel_by_weather[w] for w in (Weather.CLEAR, Weather.RAINY, Weather.SNOWY)]
        if not (decels[0] > decels[1] > decels[2] > 0.0):
            raise ValueError("brake decelerations must be positive and strictly decreasing clear->rainy->snowy")
        for name in ("wheelbase", "max_steer_angle", "max_engine_accel", "max_lateral_accel_dry", "top_speed"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class VehicleState:
    """Planar pose plus body-frame velocities. vx >= 0 (no reverse gear)."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def speed_kmh(self) -> float:
        return self.speed / KMH

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v) for v in (self.x, self.y, self.heading, self.vx, self.vy, self.yaw_rate)
        )


@dataclass(frozen=True)
class Control:
    """steer and throttle_brake, both clamped to [-1, 1].

    steer > 0 turns left; throttle_brake > 0 accelerates, < 0 brakes.
    """

    steer: float = 0.0
    throttle_brake: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "steer", min(max(float(self.steer), -1.0), 1.0))
        object.__setattr__(self, "throttle_brake", min(max(float(self.throttle_brake), -1.0), 1.0))


def step(state: VehicleState, u: Control, weather: Weather, params: VehicleParams, dt: float) -> VehicleState:
    """Advance the vehicle by dt seconds. Pure function of its inputs.

    Longitudinal: engine accel scaled by grip minus quadratic drag when
    throttling; constant weather-specific deceleration when braking. vx is
    clamped to [0, top_speed]. Lateral: commanded accel vx^2 tan(delta)/L,
    saturated at grip_scale * max_lateral_accel_dry; the discarded excess
    feeds a decaying sideways velocity so skids are visible to the sensors.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    if not state.is_finite():
        raise NonFiniteState("vehicle state is already non-finite")

    grip = weather.grip_scale
    if u.throttle_brake >= 0.0:
        ax = u.throttle_brake * params.max_engine_accel * grip - params.drag_coeff * state.vx**2
    else:
        ax = u.throttle_brake * params.brake_decel_by_weather[weather]

    vx = min(max(state.vx + ax * dt, 0.0), params.top_speed)

    delta = u.steer * params.max_steer_angle
    a_lat_cmd = vx * vx * math.tan(delta) / params.wheelbase
    a_lat_max = grip * params.max_lateral_accel_dry
    a_lat = min(max(a_lat_cmd, -a_lat_max), a_lat_max)
    yaw_rate = a_lat / vx if vx > 1e-9 else 0.0

    # Grip excess redirects the velocity vector instead of adding to it:
    # the discarded lateral demand bleeds into a decaying body-frame vy and
    # vx gives up the matching magnitude, so coasting never gains speed.
    vy_decayed = state.vy * math.exp(-dt / params.vy_decay_time)
    excess = a_lat_cmd - a_lat  # > 0 means grip exceeded to the left
    if excess == 0.0 and vy_decayed == 0.0:
        vy = 0.0
    else:
        budget = math.hypot(vx, vy_decayed)
        vy = vy_decayed - excess * dt
        vy = min(max(vy, -budget), budget)
        vx = math.sqrt(max(budget * budget - vy * vy, 0.0))

    heading = state.heading + yaw_rate * dt
    heading_mid = state.heading + 0.5 * yaw_rate * dt
    vx_avg = 0.5 * (state.vx + vx)
    vy_avg = 0.5 * (state.vy + vy)
    cos_h = math.cos(heading_mid)
    sin_h = math.sin(heading_mid)
    x = state.x + dt * (vx_avg * cos_h - vy_avg * sin_h)
    y = state.y + dt * (vx_avg * sin_h + vy_avg * cos_h)

    out = VehicleState(x=x, y=y, heading=heading, vx=vx, vy=vy, yaw_rate=yaw_rate)
    if not out.is_finite():
        raise NonFiniteState("vehicle integration produced a non-finite state")
    return out


def braking_distance(v0: float, weather: Weather, params: VehicleParams, dt: float = 0.01) -> float:
    """Simulated full-brake stopping distance from v0 m/s on a straight line."""
    if v0 <= 0.0:
        raise ValueError("v0 must be positive")
    state = VehicleState(vx=v0)
    brake = Control(steer=0.0, throttle_brake=-1.0)
    max_steps = int(10.0 * v0 / (min(params.brake_decel_by_weather.values()) * dt)) + 10
    for _ in range(max_steps):
        state = step(state, brake, weather, params, dt)
        if state.vx <= 0.0:
            return state.x
    raise RuntimeError("vehicle failed to stop; brake parameters look broken")


@dataclass(frozen=True)
class CalibrationRow:
    weather: Weather
    distance_m: float
    reference_m: float
    rel_error: float
    brake_decel: float
    grip_scale: float


@dataclass(frozen=True)
class CalibrationReport:
    rows: tuple[CalibrationRow, ...]
    speed_kmh: float
    dt: float

    @property
    def max_rel_error(self) -> float:
        return max(abs(r.rel_error) for r in self.rows)

    def format_table(self) -> str:
        lines = [
            f"braking calibration at {self.speed_kmh:.1f} km/h, dt = {self.dt:g} s",
            f"{'weather':<8} {'distance_m':>10} {'reference_m':>11} {'error_%':>8} {'decel_m_s2':>10} {'grip':>6}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.weather.value:<8} {r.distance_m:>10.3f} {r.reference_m:>11.1f} "
                f"{100.0 * r.rel_error:>8.3f} {r.brake_decel:>10.4f} {r.grip_scale:>6.2f}"
            )
        lines.append(f"max |error| = {100.0 * self.max_rel_error:.3f}%")
        return "\n".join(lines)


def calibrate(params: VehicleParams | None = None, dt: float = 0.01, tolerance: float = 0.02) -> CalibrationReport:
    """Check simulated stopping distances against the references for all weathers.

    Raises CalibrationFailure (carrying the report) when any relative error
    exceeds the tolerance, default 2%.
    """
    params = params or VehicleParams()
    v0 = BRAKING_REFERENCE_SPEED
    rows = []
    for w in Weather:
        d = braking_distance(v0, w, params, dt)
        ref = BRAKING_REFERENCE_M[w]
        rows.append(
            CalibrationRow(
                weather=w,
                distance_m=d,
                reference_m=ref,
                rel_error=(d - ref) / ref,
                brake_decel=params.brake_decel_by_weather[w],
                grip_scale=w.grip_scale,
            )
        )
    report = CalibrationReport(rows=tuple(rows), speed_kmh=v0 / KMH, dt=dt)
    if report.max_rel_error > tolerance:
        raise CalibrationFailure(
            f"braking distance error {100.0 * report.max_rel_error:.2f}% exceeds {100.0 * tolerance:.0f}%",
            report=report,
        )
    return report
