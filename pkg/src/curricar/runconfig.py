"""Run configuration: profiles, the flat key-value config format, snapshots.

Config files are plain text, one `section.key = value` per line, `#` starts
a comment. Every key is listed in REGISTRY; unknown keys are rejected so a
typo cannot silently change a run. Resolution order: profile defaults,
then config file, then --set overrides. The fully resolved mapping is
written into each run directory as config.snapshot in the same format, so
a run can be reproduced from the snapshot alone (on the same backend).
"""

from __future__ import annotations

from dataclasses import dataclass

from .curriculum import TrainSettings
from .errors import InvalidConfig
from .sac import SacHyperParams
from .sensors import RaySensorConfig
from .vehicle import KMH, VehicleParams, Weather, brake_decel_from_reference

_DECEL = brake_decel_from_reference()


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_seeds(s) -> tuple[int, ...]:
    if isinstance(s, tuple):
        return s
    parts = [p for p in str(s).replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("seeds list is empty")
    return tuple(int(p) for p in parts)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


# key -> (parser, default). None defaults mean "unset".
REGISTRY: dict[str, tuple] = {
    "run.profile": (str, "desk"),
    "run.seeds": (_parse_seeds, (1, 2, 3)),
    "run.baseline": (str, None),
    "run.scenario": (int, None),
    "run.steps": (int, None),
    "run.out": (str, None),
    "run.reuse_baseline": (_parse_bool, True),
    "sac.lr_value": (float, 0.0005),
    "sac.lr_policy": (float, 0.0001),
    "sac.gamma": (float, 0.995),
    "sac.tau": (float, 0.001),
    "sac.alpha": (float, 0.2),
    "sac.batch_size": (int, 64),
    "sac.buffer_capacity": (int, 100_000),
    "sac.theta": (float, 0.15),
    "sac.hidden_width": (int, 256),
    "sac.update_every": (int, 1),
    "sac.warmup_steps": (int, 1000),
    "sac.reward_scale": (float, 1.0),
    "sac.twin_critics": (_parse_bool, True),
    "env.dt": (float, 0.05),
    "env.max_episode_steps": (int, 4000),
    "env.low_speed_threshold_kmh": (float, 5.0),
    "env.low_speed_grace_steps": (int, 100),
    "env.spawn_speed": (float, 1.0),
    "env.max_range": (float, 200.0),
    "vehicle.wheelbase": (float, 2.8),
    "vehicle.max_steer_angle": (float, 0.52),
    "vehicle.max_engine_accel": (float, 4.0),
    "vehicle.max_lateral_accel_dry": (float, 7.85),
    "vehicle.top_speed_kmh": (float, 150.0),
    "vehicle.brake_decel_clear": (float, _DECEL[Weather.CLEAR]),
    "vehicle.brake_decel_rainy": (float, _DECEL[Weather.RAINY]),
    "vehicle.brake_decel_snowy": (float, _DECEL[Weather.SNOWY]),
    "vehicle.vy_decay_time": (float, 0.5),
    "curriculum.scale": (int, 20),
    "curriculum.eval_every": (int, 500),
    "curriculum.n_eval_episodes": (int, 3),
    "curriculum.flush_buffer": (_parse_bool, True),
    "curriculum.log_losses": (_parse_bool, True),
}

# The desk profile shrinks the networks and budgets so the whole experiment
# matrix runs on one machine; paper keeps the full-scale values.
PROFILES: dict[str, dict[str, object]] = {
    "desk": {
        "sac.hidden_width": 64,
        "sac.warmup_steps": 300,
        "sac.reward_scale": 0.01,
        "env.max_episode_steps": 400,
        "curriculum.scale": 20,
        "curriculum.eval_every": 500,
    },
    "paper": {
        "sac.hidden_width": 256,
        "sac.warmup_steps": 1000,
        "sac.reward_scale": 1.0,
        "env.max_episode_steps": 4000,
        "curriculum.scale": 1,
        "curriculum.eval_every": 5000,
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the flat key-value grammar into a raw string mapping."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise InvalidConfig(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def resolve_config(
    profile: str | None = None,
    file_values: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
) -> dict[str, object]:
    """Merge profile defaults, a config file and CLI overrides into typed values."""
    raw: dict[str, str | object] = {}
    if file_values:
        raw.update(file_values)
    if overrides:
        raw.update(overrides)

    for key in raw:
        if key not in REGISTRY:
            raise InvalidConfig(f"unknown config key: {key!r}")

    prof = profile or str(raw.get("run.profile", REGISTRY["run.profile"][1]))
    if prof not in PROFILES:
        raise InvalidConfig(f"unknown profile {prof!r}; choose from {sorted(PROFILES)}")

    resolved: dict[str, object] = {}
    for key, (parser, default) in REGISTRY.items():
        value = PROFILES[prof].get(key, default)
        if key in raw:
            v = raw[key]
            try:
                value = parser(v) if isinstance(v, str) else v
            except (ValueError, TypeError) as exc:
                raise InvalidConfig(f"bad value for {key}: {exc}") from exc
        resolved[key] = value
    resolved["run.profile"] = prof
    return resolved


def snapshot_text(resolved: dict[str, object]) -> str:
    lines = [f"{key} = {_fmt(resolved[key])}" for key in sorted(resolved)]
    return "\n".join(lines) + "\n"


def build_vehicle(cfg: dict[str, object]) -> VehicleParams:
    return VehicleParams(
        wheelbase=cfg["vehicle.wheelbase"],
        max_steer_angle=cfg["vehicle.max_steer_angle"],
        max_engine_accel=cfg["vehicle.max_engine_accel"],
        max_lateral_accel_dry=cfg["vehicle.max_lateral_accel_dry"],
        top_speed=cfg["vehicle.top_speed_kmh"] * KMH,
        brake_decel_by_weather={
            Weather.CLEAR: cfg["vehicle.brake_decel_clear"],
            Weather.RAINY: cfg["vehicle.brake_decel_rainy"],
            Weather.SNOWY: cfg["vehicle.brake_decel_snowy"],
        },
        vy_decay_time=cfg["vehicle.vy_decay_time"],
    )


def build_settings(cfg: dict[str, object]) -> TrainSettings:
    """Turn a resolved config mapping into the objects the engine consumes."""
    try:
        hyper = SacHyperParams(
            lr_value=cfg["sac.lr_value"],
            lr_policy=cfg["sac.lr_policy"],
            gamma=cfg["sac.gamma"],
            tau=cfg["sac.tau"],
            alpha=cfg["sac.alpha"],
            batch_size=cfg["sac.batch_size"],
            buffer_capacity=cfg["sac.buffer_capacity"],
            theta=cfg["sac.theta"],
            hidden_width=cfg["sac.hidden_width"],
            update_every=cfg["sac.update_every"],
            warmup_steps=cfg["sac.warmup_steps"],
            reward_scale=cfg["sac.reward_scale"],
            twin_critics=cfg["sac.twin_critics"],
        )
        return TrainSettings(
            profile=cfg["run.profile"],
            hyper=hyper,
            dt=cfg["env.dt"],
            max_episode_steps=cfg["env.max_episode_steps"],
            low_speed_threshold_kmh=cfg["env.low_speed_threshold_kmh"],
            low_speed_grace_steps=cfg["env.low_speed_grace_steps"],
            spawn_speed=cfg["env.spawn_speed"],
            sensor=RaySensorConfig(max_range=cfg["env.max_range"]),
            vehicle=build_vehicle(cfg),
            scale=cfg["curriculum.scale"],
            eval_every=cfg["curriculum.eval_every"],
            n_eval_episodes=cfg["curriculum.n_eval_episodes"],
            flush_buffer_on_transition=cfg["curriculum.flush_buffer"],
            log_losses=cfg["curriculum.log_losses"],
        )
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    """The run.* selections, split out of the resolved mapping for the CLI."""

    profile: str
    seeds: tuple[int, ...]
    baseline: str | None
    scenario: int | None
    steps: int | None
    out: str | None
    reuse_baseline: bool

    @staticmethod
    def from_resolved(cfg: dict[str, object]) -> "RunConfig":
        return RunConfig(
            profile=cfg["run.profile"],
            seeds=_parse_seeds(cfg["run.seeds"]),
            baseline=cfg["run.baseline"],
            scenario=cfg["run.scenario"],
            steps=cfg["run.steps"],
            out=cfg["run.out"],
            reuse_baseline=bool(cfg["run.reuse_baseline"]),
        )
