"""Episodic driving environment: reset/step, reward, termination, logging."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonFiniteState, SteppingTerminatedEnv
from .geometry import TrackKind, build_track
from .sensors import OBS_COLUMNS, Observation, RaySensorConfig, sense
from .vehicle import Control, VehicleParams, VehicleState, Weather, step as dynamics_step

TERMINATION_PENALTY = -20.0


class TerminationReason(enum.Enum):
    NONE = "none"
    OFF_ROAD = "off_road"
    LOW_SPEED = "low_speed"
    NON_FINITE = "non_finite"
    MAX_STEPS = "max_steps"


# reasons that add the fixed penalty; running out of steps does not
PENALIZED_REASONS = frozenset(
    {TerminationReason.OFF_ROAD, TerminationReason.LOW_SPEED, TerminationReason.NON_FINITE}
)


@dataclass(frozen=True)
class EnvConfig:
    track_kind: TrackKind = TrackKind.STRAIGHT
    weather: Weather = Weather.CLEAR
    dt: float = 0.05
    max_episode_steps: int = 4000
    low_speed_threshold_kmh: float = 5.0
    low_speed_grace_steps: int = 100
    spawn_speed: float = 1.0
    sensor: RaySensorConfig = field(default_factory=RaySensorConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)

    def __post_init__(self):
        if self.max_episode_steps <= 0:
            raise ValueError("max_episode_steps must be positive")
        if not 0.0 < self.dt <= 0.1:
            raise ValueError("dt must be in (0, 0.1]")


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    termination_reason: TerminationReason

    def __post_init__(self):
        assert self.done == (self.termination_reason != TerminationReason.NONE)


def compute_reward(speed_kmh: float, beta: float, lateral_offset_m: float) -> float:
    """Per-step driving reward before any termination penalty.

    speed in km/h times (cos(beta) - |sin(beta)| - |lateral offset in meters|):
    fast, aligned and centered is good; lateral speed and offset are charged
    in proportion to how fast the vehicle is going.
    """
    return speed_kmh * (math.cos(beta) - abs(math.sin(beta)) - abs(lateral_offset_m))


class DrivingEnv:
    """One vehicle on one track under one weather; single-threaded episodes.

    The per-step reward is computed on the post-step pose. Termination adds
    TERMINATION_PENALTY for off-road, sustained low speed and integration
    blow-ups; hitting the step budget truncates without penalty.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.track = build_track(config.track_kind)
        self.rng = np.random.default_rng(0)
        self.state: VehicleState | None = None
        self.frame = None
        self.step_count = 0
        self.done = True
        self._low_speed_run = 0
        self._last_obs: Observation | None = None
        self._log_writer = None
        self._log_file = None

    # -- episode lifecycle -------------------------------------------------

    def reset(self, seed: int | None = None) -> Observation:
        """Start a new episode at the track start, centered and aligned.

        The vehicle spawns with a small positive speed (spawn_speed m/s).
        Passing a seed reseeds the environment RNG; the spawn itself is
        deterministic either way.
        """
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        x, y, heading = self.track.start_pose()
        self.state = VehicleState(x=x, y=y, heading=heading, vx=self.config.spawn_speed)
        self.step_count = 0
        self.done = False
        self._low_speed_run = 0
        obs = sense(self.track, self.state, self.config.sensor, self.config.vehicle)
        self.frame = obs.frame
        self._last_obs = obs
        return obs

    def step(self, action: Control | np.ndarray) -> StepResult:
        if self.done or self.state is None:
            raise SteppingTerminatedEnv("call reset() before stepping")
        if not isinstance(action, Control):
            action = Control(steer=float(action[0]), throttle_brake=float(action[1]))

        try:
            self.state = dynamics_step(
                self.state, action, self.config.weather, self.config.vehicle, self.config.dt
            )
        except NonFiniteState:
            # treated as a crash: keep the last finite observation, flag done
            self.step_count += 1
            self.done = True
            result = StepResult(
                observation=self._last_obs,
                reward=TERMINATION_PENALTY,
                done=True,
                termination_reason=TerminationReason.NON_FINITE,
            )
            self._log(action, result)
            return result

        obs = sense(self.track, self.state, self.config.sensor, self.config.vehicle)
        self.frame = obs.frame
        self._last_obs = obs
        self.step_count += 1

        speed_kmh = self.state.speed_kmh
        reward = compute_reward(speed_kmh, obs.frame.beta, obs.frame.d)

        if speed_kmh < self.config.low_speed_threshold_kmh:
            self._low_speed_run += 1
        else:
            self._low_speed_run = 0

        reason = TerminationReason.NONE
        if obs.off_road:
            reason = TerminationReason.OFF_ROAD
        elif self._low_speed_run >= self.config.low_speed_grace_steps:
            reason = TerminationReason.LOW_SPEED
        elif self.step_count >= self.config.max_episode_steps:
            reason = TerminationReason.MAX_STEPS

        if reason in PENALIZED_REASONS:
            reward += TERMINATION_PENALTY
        self.done = reason != TerminationReason.NONE

        result = StepResult(
            observation=obs, reward=reward, done=self.done, termination_reason=reason
        )
        self._log(action, result)
        return result

    # -- per-step CSV logging ----------------------------------------------

    LOG_COLUMNS = (
        "step",
        "steer",
        "throttle_brake",
        "reward",
        "done",
        "termination_reason",
        "s",
        "d",
        "beta",
        "speed_kmh",
    ) + OBS_COLUMNS

    def attach_csv(self, path: str | Path) -> None:
        """Stream every subsequent step to a CSV file (header written now)."""
        self.detach_csv()
        self._log_file = open(path, "w", newline="")
        self._log_writer = csv.writer(self._log_file)
        self._log_writer.writerow(self.LOG_COLUMNS)

    def detach_csv(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
        self._log_file = None
        self._log_writer = None

    def _log(self, action: Control, result: StepResult) -> None:
        if self._log_writer is None:
            return
        obs = result.observation
        row = [
            self.step_count,
            repr(action.steer),
            repr(action.throttle_brake),
            repr(result.reward),
            int(result.done),
            result.termination_reason.value,
            repr(obs.frame.s),
            repr(obs.frame.d),
            repr(obs.frame.beta),
            repr(self.state.speed_kmh if self.state is not None else float("nan")),
        ] + [repr(v) for v in obs.vector]
        self._log_writer.writerow(row)
