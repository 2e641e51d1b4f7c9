"""Hand-written centerline-following controller.

Serves two jobs: a deterministic reference policy for evaluation plumbing,
and a reward oracle. On a straight road from the centered spawn it commands
zero steering and full throttle, which is the reward-optimal behavior for
this dynamics model, so learned policies can be scored against it.
"""

from __future__ import annotations

import math

from .env import DrivingEnv
from .geometry import Track
from .sensors import Observation
from .vehicle import VehicleParams, Weather
import numpy as np


class CenterlineController:
    """Feedforward curvature steering + PD centering + corner-speed planning."""

    def __init__(
        self,
        track: Track,
        params: VehicleParams,
        weather: Weather,
        lateral_gain: float = 0.05,
        heading_gain: float = 0.8,
        throttle_gain: float = 2.0,
        corner_margin: float = 0.9,
        brake_margin: float = 0.85,
        lookahead_m: float = 260.0,
        lookahead_step_m: float = 4.0,
    ):
        self.track = track
        self.params = params
        self.weather = weather
        self.lateral_gain = lateral_gain
        self.heading_gain = heading_gain
        self.throttle_gain = throttle_gain
        self.corner_margin = corner_margin
        self.brake_margin = brake_margin
        self.lookahead_m = lookahead_m
        self.lookahead_step_m = lookahead_step_m

    def _allowed_speed(self, s: float) -> float:
        """Top speed, capped by every upcoming corner reachable under braking."""
        grip = self.weather.grip_scale
        a_lat = self.corner_margin * grip * self.params.max_lateral_accel_dry
        a_brake = self.brake_margin * self.params.brake_decel_by_weather[self.weather]
        v_allow = self.params.top_speed
        ds = 0.0
        while ds <= self.lookahead_m:
            kappa = abs(self.track.curvature_at(s + ds))
            if kappa > 1e-9:
                v_corner = math.sqrt(a_lat / kappa)
                v_here = math.sqrt(v_corner**2 + 2.0 * a_brake * ds)
                v_allow = min(v_allow, v_here)
            ds += self.lookahead_step_m
        return v_allow

    def __call__(self, obs: Observation, env: DrivingEnv) -> np.ndarray:
        frame = env.frame
        state = env.state
        kappa = self.track.curvature_at(frame.s + 2.0)
        steer_ff = math.atan(self.params.wheelbase * kappa)
        steer_fb = -self.lateral_gain * frame.d - self.heading_gain * frame.beta
        steer = (steer_ff + steer_fb) / self.params.max_steer_angle

        v_allow = self._allowed_speed(frame.s)
        throttle = self.throttle_gain * (v_allow - state.vx)
        return np.array(
            [min(max(steer, -1.0), 1.0), min(max(throttle, -1.0), 1.0)], dtype=np.float64
        )
