"""Ray sensing and observation assembly.

The observation vector has 23 entries in a fixed order, defined once here
and used everywhere else:

    [0:19]  ray distances / max_range, front half-plane, -90 deg .. +90 deg
            in 10 degree steps (index 0 points right, index 18 left)
    [19]    beta, heading error vs. the road tangent, radians
    [20]    lateral offset / (width/2), signed, left positive
    [21]    vx / top_speed
    [22]    vy / top_speed
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Track, TrackFrame, is_off_road
from .vehicle import VehicleParams, VehicleState

N_RAYS = 19
OBS_SIZE = 23

RAY_SLICE = slice(0, N_RAYS)
IDX_BETA = 19
IDX_TRACK_POS = 20
IDX_VX = 21
IDX_VY = 22

OBS_COLUMNS = tuple(f"ray_{i:02d}" for i in range(N_RAYS)) + ("beta", "track_pos", "vx_norm", "vy_norm")


def _default_ray_angles() -> np.ndarray:
    return np.linspace(-0.5 * math.pi, 0.5 * math.pi, N_RAYS)


@dataclass(frozen=True)
class RaySensorConfig:
    """19 rays over [-90, +90] degrees relative to the heading, 10 deg apart."""

    max_range: float = 200.0
    relative_angles: np.ndarray = field(default_factory=_default_ray_angles)

    @property
    def n_rays(self) -> int:
        return int(self.relative_angles.shape[0])


@dataclass(frozen=True)
class Observation:
    """The 23-entry state vector plus the track frame it was derived from."""

    vector: np.ndarray
    frame: TrackFrame
    off_road: bool

    @property
    def rays(self) -> np.ndarray:
        return self.vector[RAY_SLICE]

    @property
    def beta(self) -> float:
        return float(self.vector[IDX_BETA])

    @property
    def track_pos(self) -> float:
        return float(self.vector[IDX_TRACK_POS])


def sense(track: Track, state: VehicleState, cfg: RaySensorConfig, params: VehicleParams) -> Observation:
    """Build the observation for the current pose.

    Off-road poses do not raise: the terminal step still needs a finite
    observation, so rays fall back to unvalidated boundary intersections
    and the result is flagged via Observation.off_road.
    """
    frame = track.project(state.x, state.y, state.heading)
    off = is_off_road(frame, track.width)
    dists = track.ray_distances(
        state.x,
        state.y,
        state.heading + cfg.relative_angles,
        cfg.max_range,
        validate=False,
    )
    vec = np.empty(cfg.n_rays + 4, dtype=np.float64)
    vec[: cfg.n_rays] = np.clip(dists / cfg.max_range, 0.0, 1.0)
    vec[cfg.n_rays] = frame.beta
    vec[cfg.n_rays + 1] = frame.d / (0.5 * track.width)
    vec[cfg.n_rays + 2] = state.vx / params.top_speed
    vec[cfg.n_rays + 3] = state.vy / params.top_speed
    return Observation(vector=vec, frame=frame, off_road=off)
