"""Command-line front end.

Exit codes: 0 success, 1 validation or calibration failure, 2 I/O failure.
The output root defaults to $CURRICAR_RUNS, then ./runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import _kernels, report
from .curriculum import (
    BASELINE_BUDGETS,
    CurriculumScenario,
    agent_policy,
    builtin_scenarios,
    evaluate,
    run_baseline,
    run_curriculum,
    scale_budget,
)
from .env import DrivingEnv
from .errors import CalibrationFailure, InvalidConfig, IoFailure, MissingRuns
from .geometry import TrackKind, build_track
from .runconfig import RunConfig, build_settings, parse_config_text, resolve_config, snapshot_text
from .sac import load_checkpoint
from .sensors import OBS_SIZE
from .vehicle import Weather, calibrate


def _parse_sets(pairs) -> dict[str, str]:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise InvalidConfig(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _resolve(args) -> dict[str, object]:
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read config file: {exc}") from exc
    overrides = _parse_sets(getattr(args, "set", None))
    for name in ("profile", "seeds", "baseline", "scenario", "steps", "out"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[f"run.{name}"] = str(v)
    if getattr(args, "no_reuse_baseline", False):
        overrides["run.reuse_baseline"] = "false"
    return resolve_config(file_values=file_values, overrides=overrides)


def _out_root(run_cfg: RunConfig) -> Path:
    return Path(run_cfg.out or os.environ.get("CURRICAR_RUNS", "runs"))


def _track_kind(name: str) -> TrackKind:
    try:
        return TrackKind(name.lower())
    except ValueError as exc:
        raise InvalidConfig(f"unknown track {name!r}; use straight, uturn or circuit") from exc


def _weather(name: str) -> Weather:
    try:
        return Weather(name.lower())
    except ValueError as exc:
        raise InvalidConfig(f"unknown weather {name!r}; use clear, rainy or snowy") from exc


def _parse_task(text: str) -> tuple[TrackKind, Weather]:
    if ":" not in text:
        raise InvalidConfig(f"task must look like track:weather, got {text!r}")
    track, weather = text.split(":", 1)
    return _track_kind(track), _weather(weather)


# -- subcommands ---------------------------------------------------------------

def cmd_calibrate(args) -> int:
    cfg = _resolve(args)
    settings = build_settings(cfg)
    try:
        rep = calibrate(settings.vehicle, dt=args.dt)
    except CalibrationFailure as exc:
        if exc.report is not None:
            print(exc.report.format_table())
        print(f"calibration FAILED: {exc}")
        return 1
    print(rep.format_table())
    print("calibration OK")
    return 0


def cmd_track(args) -> int:
    track = build_track(_track_kind(args.kind))
    text = track.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    if args.svg:
        _render_track_svg(track, Path(args.svg))
        print(f"wrote {args.svg}")
    return 0


def _render_track_svg(track, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    _, pts = track.sample_centerline(spacing=1.0)
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.plot(pts[:, 0], pts[:, 1], "k--", linewidth=0.8, label="centerline")
    for side in (+0.5 * track.width, -0.5 * track.width):
        edge = []
        for s in np.linspace(0.0, track.total_length, pts.shape[0]):
            x, y, h = track.point_at(float(s))
            edge.append((x - side * np.sin(h), y + side * np.cos(h)))
        edge = np.asarray(edge)
        ax.plot(edge[:, 0], edge[:, 1], "b-", linewidth=0.7)
    ax.set_aspect("equal")
    ax.set_title(f"{track.kind.value} ({track.total_length:.1f} m)")
    fig.savefig(path, format="svg")
    plt.close(fig)


def _find_baseline_checkpoint(root: Path, scenario: CurriculumScenario, seed: int) -> Path | None:
    phase0 = scenario.phases[0]
    run_dir = root / f"baseline-{phase0.label()}" / f"seed_{seed}"
    summary = run_dir / "summary.json"
    ckpt = run_dir / "phase_0" / "checkpoint.npz"
    if not (summary.is_file() and ckpt.is_file()):
        return None
    meta = json.loads(summary.read_text())
    first = meta["phases"][0]
    if (
        first["track"] == phase0.track_kind.value
        and first["weather"] == phase0.weather.value
        and first["step_budget"] == phase0.step_budget
    ):
        return ckpt
    return None


def cmd_train(args) -> int:
    cfg = _resolve(args)
    run_cfg = RunConfig.from_resolved(cfg)
    settings = build_settings(cfg)
    if (run_cfg.baseline is None) == (run_cfg.scenario is None):
        raise InvalidConfig("choose exactly one of --baseline track:weather or --scenario N")

    root = _out_root(run_cfg)
    snapshot = snapshot_text(cfg)

    if run_cfg.baseline is not None:
        track_kind, weather = _parse_task(run_cfg.baseline)
        budget = run_cfg.steps or scale_budget(BASELINE_BUDGETS[track_kind], settings.scale)
        name = f"baseline-{track_kind.value}:{weather.value}"
        for seed in run_cfg.seeds:
            run_dir = root / name / f"seed_{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            (run_dir / "config.snapshot").write_text(snapshot)
            record, _ = run_baseline(
                track_kind, weather, budget, seed, settings, run_dir=run_dir,
                config_snapshot=cfg,
            )
            print(f"{run_dir}  steps={record.total_steps}  "
                  f"final_eval_mean={record.final_eval.mean:.1f}")
        return 0

    scenarios = {i + 1: sc for i, sc in enumerate(builtin_scenarios(settings.scale))}
    if run_cfg.scenario not in scenarios:
        raise InvalidConfig(f"scenario must be one of {sorted(scenarios)}")
    scenario = scenarios[run_cfg.scenario]
    for seed in run_cfg.seeds:
        run_dir = root / scenario.name / f"seed_{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.snapshot").write_text(snapshot)
        ckpt = _find_baseline_checkpoint(root, scenario, seed) if run_cfg.reuse_baseline else None
        if ckpt is not None:
            print(f"phase 1 reuses baseline checkpoint {ckpt}")
        record, _ = run_curriculum(
            scenario, seed, settings, run_dir=run_dir, baseline_checkpoint=ckpt,
            config_snapshot=cfg,
        )
        print(f"{run_dir}  steps={record.total_steps} (+{record.reused_steps} reused)  "
              f"final_eval_mean={record.final_eval.mean:.1f}")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve(args)
    settings = build_settings(cfg)
    agent = load_checkpoint(args.checkpoint, expected_obs_dim=OBS_SIZE)
    track_kind = _track_kind(args.track)
    weather = _weather(args.weather)
    stats = evaluate(
        agent_policy(agent), track_kind, weather, settings,
        n_episodes=args.episodes, seed=args.seed,
    )
    payload = {
        "mean": stats.mean, "min": stats.min, "max": stats.max,
        "pct_spread": stats.pct_spread, "n_episodes": stats.n_episodes,
        "track": track_kind.value, "weather": weather.value,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    if args.episode_csv:
        env = DrivingEnv(settings.env_config(track_kind, weather))
        env.attach_csv(args.episode_csv)
        obs = env.reset(seed=args.seed)
        policy = agent_policy(agent)
        while True:
            res = env.step(policy(obs, env))
            obs = res.observation
            if res.done:
                break
        env.detach_csv()
        print(f"wrote {args.episode_csv}")
    return 0


def cmd_report(args) -> int:
    csv_path, svg_path = report.write_report([Path(d) for d in args.runs], Path(args.out))
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curricar",
        description="Weather-aware driving simulator + SAC curriculum training lab "
                    f"(kernel backend: {_kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key-value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a single config key (repeatable)")
    common.add_argument("--profile", choices=("desk", "paper"), help="settings profile")

    p = sub.add_parser("calibrate", parents=[common],
                       help="check braking distances against the reference table")
    p.add_argument("--dt", type=float, default=0.01)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("track", help="export a road layout as JSON (optionally render SVG)")
    p.add_argument("--kind", required=True)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("train", parents=[common], help="run baseline or curriculum training")
    p.add_argument("--baseline", metavar="TRACK:WEATHER")
    p.add_argument("--scenario", type=int, metavar="N")
    p.add_argument("--seeds", help="comma-separated seed list, default 1,2,3")
    p.add_argument("--steps", type=int, help="override the baseline step budget")
    p.add_argument("--out", help="output root (default $CURRICAR_RUNS or ./runs)")
    p.add_argument("--no-reuse-baseline", action="store_true",
                   help="always train the first curriculum phase from scratch")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint deterministically")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--track", required=True)
    p.add_argument("--weather", required=True)
    p.add_argument("--episodes", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the stats as JSON here")
    p.add_argument("--episode-csv", help="also roll one episode and dump per-step CSV")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="combine finished runs into CSV + SVG curves")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidConfig, CalibrationFailure, MissingRuns, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IoFailure, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
