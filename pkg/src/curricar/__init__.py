"""curricar: a desk-scale curriculum reinforcement-learning lab for
weather-aware 2D highway driving.

Core pieces: road geometry with ray sensing (geometry, sensors), a
grip-calibrated bicycle vehicle (vehicle), an episodic driving MDP (env),
a from-scratch dense-network SAC agent (nn, sac), and a phase-sequenced
training engine with a CLI front end (curriculum, cli).
"""

from ._kernels import BACKEND
from .curriculum import (
    BASELINE_BUDGETS,
    CurriculumScenario,
    EvalStats,
    Phase,
    RunRecord,
    TrainSettings,
    builtin_scenarios,
    evaluate,
    run_baseline,
    run_curriculum,
)
from .env import DrivingEnv, EnvConfig, StepResult, TerminationReason, compute_reward
from .geometry import Track, TrackFrame, TrackKind, build_track, is_off_road
from .sac import ReplayBuffer, SacAgent, SacHyperParams, Transition, load_checkpoint
from .sensors import OBS_SIZE, Observation, RaySensorConfig, sense
from .vehicle import Control, VehicleParams, VehicleState, Weather, braking_distance, calibrate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BASELINE_BUDGETS",
    "Control",
    "CurriculumScenario",
    "DrivingEnv",
    "EnvConfig",
    "EvalStats",
    "OBS_SIZE",
    "Observation",
    "Phase",
    "RaySensorConfig",
    "ReplayBuffer",
    "RunRecord",
    "SacAgent",
    "SacHyperParams",
    "StepResult",
    "Track",
    "TrackFrame",
    "TrackKind",
    "TrainSettings",
    "Transition",
    "TerminationReason",
    "VehicleParams",
    "VehicleState",
    "Weather",
    "braking_distance",
    "build_track",
    "builtin_scenarios",
    "calibrate",
    "compute_reward",
    "evaluate",
    "is_off_road",
    "load_checkpoint",
    "run_baseline",
    "run_curriculum",
    "sense",
    "__version__",
]
