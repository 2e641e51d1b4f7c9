"""Phase-sequenced training: baselines, curricula, evaluation, run records.

A baseline is a one-phase curriculum; both go through the same loop, so a
single-phase scenario reproduces a baseline bit for bit under the same
seed. Network weights always carry across phase transitions; the replay
buffer is flushed at each transition by default (old-phase physics is off
distribution for the new phase) with a settings flag to keep it instead.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import _kernels
from .env import DrivingEnv, EnvConfig, PENALIZED_REASONS, TerminationReason
from .geometry import TrackKind
from .sac import ReplayBuffer, SacAgent, SacHyperParams, load_checkpoint
from .scripted import CenterlineController
from .sensors import OBS_SIZE, RaySensorConfig
from .vehicle import VehicleParams, Weather

ACTION_SIZE = 2


@dataclass(frozen=True)
class Phase:
    track_kind: TrackKind
    weather: Weather
    step_budget: int

    def __post_init__(self):
        if self.step_budget <= 0:
            raise ValueError("step_budget must be positive")

    def label(self) -> str:
        return f"{self.track_kind.value}:{self.weather.value}"


@dataclass(frozen=True)
class CurriculumScenario:
    name: str
    phases: tuple[Phase, ...]

    def __post_init__(self):
        if not self.phases:
            raise ValueError("a scenario needs at least one phase")

    def total_budget(self) -> int:
        return sum(p.step_budget for p in self.phases)


# Single-task training budgets, environment steps.
BASELINE_BUDGETS = {
    TrackKind.STRAIGHT: 75_000,
    TrackKind.UTURN: 50_000,
    TrackKind.CIRCUIT: 200_000,
}

_SCENARIO_TABLE = (
    ("scenario-1", ((TrackKind.STRAIGHT, Weather.CLEAR, 75_000),
                    (TrackKind.UTURN, Weather.CLEAR, 25_000),
                    (TrackKind.CIRCUIT, Weather.CLEAR, 100_000))),
    ("scenario-2", ((TrackKind.UTURN, Weather.RAINY, 50_000),
                    (TrackKind.CIRCUIT, Weather.RAINY, 75_000),
                    (TrackKind.CIRCUIT, Weather.CLEAR, 75_000))),
    ("scenario-3", ((TrackKind.STRAIGHT, Weather.RAINY, 75_000),
                    (TrackKind.CIRCUIT, Weather.RAINY, 75_000),
                    (TrackKind.CIRCUIT, Weather.SNOWY, 50_000))),
    ("scenario-4", ((TrackKind.STRAIGHT, Weather.CLEAR, 75_000),
                    (TrackKind.CIRCUIT, Weather.RAINY, 75_000),
                    (TrackKind.CIRCUIT, Weather.SNOWY, 50_000))),
    ("scenario-5", ((TrackKind.STRAIGHT, Weather.CLEAR, 75_000),
                    (TrackKind.STRAIGHT, Weather.SNOWY, 25_000),
                    (TrackKind.CIRCUIT, Weather.SNOWY, 100_000))),
)


def scale_budget(budget: int, scale: int) -> int:
    return max(1, budget // scale)


def builtin_scenarios(scale: int = 1) -> list[CurriculumScenario]:
    """The five stock three-phase curricula; budgets divided by scale."""
    out = []
    for name, rows in _SCENARIO_TABLE:
        phases = tuple(Phase(k, w, scale_budget(b, scale)) for k, w, b in rows)
        out.append(CurriculumScenario(name=name, phases=phases))
    return out


def baseline_combinations() -> list[tuple[TrackKind, Weather]]:
    """The nine single-task (track, weather) training combinations."""
    return [(k, w) for k in TrackKind for w in Weather]


# -- settings ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainSettings:
    """Everything a run needs besides the phase list and the seed."""

    profile: str = "desk"
    hyper: SacHyperParams = field(default_factory=SacHyperParams)
    dt: float = 0.05
    max_episode_steps: int = 400
    low_speed_threshold_kmh: float = 5.0
    low_speed_grace_steps: int = 100
    spawn_speed: float = 1.0
    sensor: RaySensorConfig = field(default_factory=RaySensorConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    scale: int = 20
    eval_every: int = 1000
    n_eval_episodes: int = 3
    flush_buffer_on_transition: bool = True
    log_losses: bool = True

    def env_config(self, track_kind: TrackKind, weather: Weather) -> EnvConfig:
        return EnvConfig(
            track_kind=track_kind,
            weather=weather,
            dt=self.dt,
            max_episode_steps=self.max_episode_steps,
            low_speed_threshold_kmh=self.low_speed_threshold_kmh,
            low_speed_grace_steps=self.low_speed_grace_steps,
            spawn_speed=self.spawn_speed,
            sensor=self.sensor,
            vehicle=self.vehicle,
        )


def _seed_seq(seed: int, stream: int, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(seed), stream, index))


_STREAM_AGENT = 0
_STREAM_BUFFER = 1
_STREAM_ENV = 2
_STREAM_FINAL_EVAL = 3


# -- records -----------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    phase_index: int
    phase_step: int
    global_step: int
    episode_return: float
    length: int
    termination_reason: str
    completed: bool


@dataclass(frozen=True)
class EvalPoint:
    global_step: int
    phase_index: int
    mean_return: float


@dataclass(frozen=True)
class EvalStats:
    mean: float
    min: float
    max: float
    pct_spread: float
    n_episodes: int

    @staticmethod
    def from_returns(returns) -> "EvalStats":
        mean = float(np.mean(returns))
        lo = float(np.min(returns))
        hi = float(np.max(returns))
        # half-range over mean, as a percentage; 0 when the mean vanishes
        spread = 100.0 * (hi - lo) / (2.0 * abs(mean)) if mean != 0.0 else 0.0
        return EvalStats(mean=mean, min=lo, max=hi, pct_spread=spread, n_episodes=len(returns))


@dataclass
class RunRecord:
    name: str
    seed: int
    phases: tuple[Phase, ...]
    episodes: list[EpisodeRecord]
    eval_points: list[EvalPoint]
    final_eval: EvalStats
    config: dict
    wall_clock_s: float
    total_steps: int
    reused_steps: int = 0


# -- evaluation ----------------------------------------------------------------

def agent_policy(agent: SacAgent):
    """Deterministic policy adapter for evaluate()."""
    return lambda obs, env: agent.select_action(obs.vector, deterministic=True)


def rollout_return(policy, env: DrivingEnv, seed=None) -> tuple[float, int, TerminationReason]:
    obs = env.reset(seed=seed)
    total = 0.0
    steps = 0
    reason = TerminationReason.NONE
    while True:
        res = env.step(policy(obs, env))
        total += res.reward
        steps += 1
        obs = res.observation
        if res.done:
            reason = res.termination_reason
            return total, steps, reason


def evaluate(policy, track_kind: TrackKind, weather: Weather, settings: TrainSettings,
             n_episodes: int = 3, seed: int = 0) -> EvalStats:
    """Deterministic-policy rollouts; returns mean / min / max / percent spread."""
    env = DrivingEnv(settings.env_config(track_kind, weather))
    returns = []
    for i in range(n_episodes):
        total, _, _ = rollout_return(policy, env, seed=_seed_seq(seed, _STREAM_FINAL_EVAL, i))
        returns.append(total)
    return EvalStats.from_returns(returns)


def scripted_policy(track_kind: TrackKind, weather: Weather, settings: TrainSettings):
    env = DrivingEnv(settings.env_config(track_kind, weather))
    return CenterlineController(env.track, settings.vehicle, weather)


# -- the training loop -----------------------------------------------------------

class _PhaseLogs:
    """CSV sinks for one phase directory; inert when run_dir is None."""

    TRAIN_COLUMNS = ("episode", "phase_index", "phase_step", "global_step",
                     "episode_return", "length", "termination_reason", "completed")
    LOSS_COLUMNS = ("update_index", "critic1_loss", "critic2_loss", "actor_loss",
                    "mean_entropy", "mean_q")
    EVAL_COLUMNS = ("global_step", "phase_index", "mean_return")

    def __init__(self, phase_dir: Path | None, log_losses: bool):
        self._files = []
        self.train = self._open(phase_dir, "train_log.csv", self.TRAIN_COLUMNS)
        self.losses = self._open(phase_dir, "losses.csv", self.LOSS_COLUMNS) if log_losses else None
        self.evals = self._open(phase_dir, "eval_log.csv", self.EVAL_COLUMNS)

    def _open(self, phase_dir, name, columns):
        if phase_dir is None:
            return None
        f = open(phase_dir / name, "w", newline="")
        self._files.append(f)
        w = csv.writer(f)
        w.writerow(columns)
        return w

    def close(self):
        for f in self._files:
            f.close()
        self._files = []


def _write_row(writer, values) -> None:
    if writer is not None:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in values])


def train_phases(
    name: str,
    phases: tuple[Phase, ...],
    seed: int,
    settings: TrainSettings,
    run_dir: Path | None = None,
    initial_agent: SacAgent | None = None,
    reused_steps: int = 0,
    config_snapshot: dict | None = None,
) -> tuple[RunRecord, SacAgent]:
    """Train one agent through the given phases; optionally persist the run.

    The agent, each phase's replay buffer and each phase's environment draw
    from independent seed streams derived from (seed, stream, phase), so a
    run is a pure function of (phases, seed, settings).
    """
    t0 = time.perf_counter()
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)

    agent = initial_agent
    if agent is None:
        agent = SacAgent(
            obs_dim=OBS_SIZE,
            act_dim=ACTION_SIZE,
            hyper=settings.hyper,
            seed=_seed_seq(seed, _STREAM_AGENT),
        )

    hyper = agent.hyper
    episodes: list[EpisodeRecord] = []
    eval_points: list[EvalPoint] = []
    global_step = reused_steps
    episode_index = 0
    buffer: ReplayBuffer | None = None

    for k, phase in enumerate(phases):
        if buffer is None or settings.flush_buffer_on_transition:
            buffer = ReplayBuffer(
                hyper.buffer_capacity, OBS_SIZE, ACTION_SIZE, seed=_seed_seq(seed, _STREAM_BUFFER, k)
            )
        env = DrivingEnv(settings.env_config(phase.track_kind, phase.weather))
        phase_dir = None
        if run_dir is not None:
            phase_dir = run_dir / f"phase_{k}"
            phase_dir.mkdir(exist_ok=True)
        logs = _PhaseLogs(phase_dir, settings.log_losses)

        obs = env.reset(seed=_seed_seq(seed, _STREAM_ENV, k))
        ep_return = 0.0
        ep_len = 0
        # A fresh agent explores its first phase uniformly until the warmup
        # fill is reached. After a phase transition the policy is already
        # trained, so only a batch-size refill gates the updates.
        fresh_phase = agent.update_count == 0
        min_fill = max(hyper.batch_size, hyper.warmup_steps) if fresh_phase else hyper.batch_size

        for phase_step in range(1, phase.step_budget + 1):
            if fresh_phase and len(buffer) < min_fill:
                action = agent.random_action()
            else:
                action = agent.select_action(obs.vector, deterministic=False)
            res = env.step(action)
            # step-budget truncation is not an environment terminal: only
            # penalized endings cut the bootstrap
            buffer.push(
                obs.vector,
                action,
                res.reward,
                res.observation.vector,
                res.termination_reason in PENALIZED_REASONS,
            )
            obs = res.observation
            ep_return += res.reward
            ep_len += 1
            global_step += 1

            if len(buffer) >= min_fill and phase_step % hyper.update_every == 0:
                for _ in range(hyper.gradient_steps):
                    report = agent.update(buffer)
                    _write_row(
                        logs.losses,
                        (
                            agent.update_count,
                            report.critic1_loss,
                            report.critic2_loss if report.critic2_loss is not None else "",
                            report.actor_loss,
                            report.mean_entropy,
                            report.mean_q,
                        ),
                    )

            if res.done:
                rec = EpisodeRecord(
                    episode=episode_index,
                    phase_index=k,
                    phase_step=phase_step,
                    global_step=global_step,
                    episode_return=ep_return,
                    length=ep_len,
                    termination_reason=res.termination_reason.value,
                    completed=True,
                )
                episodes.append(rec)
                _write_row(logs.train, (rec.episode, k, phase_step, global_step,
                                        rec.episode_return, rec.length,
                                        rec.termination_reason, 1))
                episode_index += 1
                ep_return = 0.0
                ep_len = 0
                obs = env.reset()

            if settings.eval_every and phase_step % settings.eval_every == 0:
                stats = evaluate(
                    agent_policy(agent), phase.track_kind, phase.weather, settings,
                    n_episodes=1, seed=seed,
                )
                eval_points.append(EvalPoint(global_step, k, stats.mean))
                _write_row(logs.evals, (global_step, k, stats.mean))

        if ep_len > 0:
            # episode cut by the phase budget: recorded, flagged incomplete
            rec = EpisodeRecord(
                episode=episode_index,
                phase_index=k,
                phase_step=phase.step_budget,
                global_step=global_step,
                episode_return=ep_return,
                length=ep_len,
                termination_reason=TerminationReason.NONE.value,
                completed=False,
            )
            episodes.append(rec)
            _write_row(logs.train, (rec.episode, k, rec.phase_step, global_step,
                                    rec.episode_return, rec.length, rec.termination_reason, 0))
            episode_index += 1

        if phase_dir is not None:
            agent.save_checkpoint(phase_dir / "checkpoint.npz")
        logs.close()

    last = phases[-1]
    final_eval = evaluate(
        agent_policy(agent), last.track_kind, last.weather, settings,
        n_episodes=settings.n_eval_episodes, seed=seed,
    )

    record = RunRecord(
        name=name,
        seed=seed,
        phases=tuple(phases),
        episodes=episodes,
        eval_points=eval_points,
        final_eval=final_eval,
        config=config_snapshot or {},
        wall_clock_s=time.perf_counter() - t0,
        total_steps=global_step,
        reused_steps=reused_steps,
    )
    if run_dir is not None:
        _persist_run(run_dir, record, settings)
    return record, agent


def _persist_run(run_dir: Path, record: RunRecord, settings: TrainSettings) -> None:
    eval_payload = asdict(record.final_eval)
    (run_dir / "eval.json").write_text(json.dumps(eval_payload, indent=2) + "\n")
    summary = {
        "name": record.name,
        "seed": record.seed,
        "profile": settings.profile,
        "phases": [
            {"track": p.track_kind.value, "weather": p.weather.value, "step_budget": p.step_budget}
            for p in record.phases
        ],
        "total_steps": record.total_steps,
        "reused_steps": record.reused_steps,
        "episodes": len(record.episodes),
        "final_eval": eval_payload,
        "backend": _kernels.BACKEND,
        "wall_clock_s": record.wall_clock_s,
    }
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def run_baseline(
    track_kind: TrackKind,
    weather: Weather,
    budget: int,
    seed: int,
    settings: TrainSettings,
    run_dir: Path | None = None,
    config_snapshot: dict | None = None,
) -> tuple[RunRecord, SacAgent]:
    """Train a fresh agent on a single (track, weather) task."""
    phase = Phase(track_kind, weather, budget)
    name = f"baseline-{phase.label()}"
    return train_phases(name, (phase,), seed, settings, run_dir=run_dir,
                        config_snapshot=config_snapshot)


def run_curriculum(
    scenario: CurriculumScenario,
    seed: int,
    settings: TrainSettings,
    run_dir: Path | None = None,
    baseline_checkpoint: Path | None = None,
    config_snapshot: dict | None = None,
) -> tuple[RunRecord, SacAgent]:
    """Train through a scenario's phases with weights carried across transitions.

    When baseline_checkpoint is given, the first phase is assumed to be the
    already-trained baseline it points at: the agent is loaded from it and
    training starts at phase 2, with the first budget counted as reused.
    """
    if baseline_checkpoint is None:
        return train_phases(scenario.name, scenario.phases, seed, settings,
                            run_dir=run_dir, config_snapshot=config_snapshot)
    agent = load_checkpoint(
        baseline_checkpoint,
        expected_obs_dim=OBS_SIZE,
        expected_act_dim=ACTION_SIZE,
        expected_hidden_width=settings.hyper.hidden_width,
    )
    return train_phases(
        scenario.name,
        scenario.phases[1:],
        seed,
        settings,
        run_dir=run_dir,
        initial_agent=agent,
        reused_steps=scenario.phases[0].step_budget,
        config_snapshot=config_snapshot,
    )
