"""Comparison artifacts from completed run directories: CSV + SVG figure."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import MissingRuns

CSV_COLUMNS = ("scenario", "seed", "step", "episode_return", "phase_index")


def load_run(run_dir: Path) -> dict:
    """Read one run directory; raises MissingRuns on incomplete runs."""
    run_dir = Path(run_dir)
    summary_path = run_dir / "summary.json"
    eval_path = run_dir / "eval.json"
    if not summary_path.is_file() or not eval_path.is_file():
        raise MissingRuns(f"{run_dir} is not a completed run (summary.json/eval.json missing)")
    summary = json.loads(summary_path.read_text())
    episodes = []
    boundaries = []
    step_base = summary.get("reused_steps", 0)
    for k in range(len(summary["phases"])):
        log = run_dir / f"phase_{k}" / "train_log.csv"
        if not log.is_file():
            raise MissingRuns(f"{run_dir} is missing phase_{k}/train_log.csv")
        with open(log, newline="") as f:
            for row in csv.DictReader(f):
                episodes.append(
                    {
                        "step": int(row["global_step"]),
                        "episode_return": float(row["episode_return"]),
                        "phase_index": int(row["phase_index"]),
                        "completed": row["completed"] == "1",
                    }
                )
        step_base += summary["phases"][k]["step_budget"]
        boundaries.append(step_base)
    return {
        "dir": run_dir,
        "name": summary["name"],
        "seed": summary["seed"],
        "summary": summary,
        "eval": json.loads(eval_path.read_text()),
        "episodes": episodes,
        "phase_boundaries": boundaries,
    }


def write_combined_csv(runs: list[dict], out_path: Path) -> Path:
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for run in runs:
            for ep in run["episodes"]:
                w.writerow(
                    [run["name"], run["seed"], ep["step"], repr(ep["episode_return"]), ep["phase_index"]]
                )
    return out_path


def write_reward_figure(runs: list[dict], out_path: Path) -> Path:
    """One row per scenario: its training curves (black) over baselines (red)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    baselines = [r for r in runs if r["name"].startswith("baseline-")]
    scenarios = [r for r in runs if not r["name"].startswith("baseline-")]
    row_names = sorted({r["name"] for r in scenarios}) or sorted({r["name"] for r in baselines})
    if not row_names:
        raise MissingRuns("no runs to plot")

    fig, axes = plt.subplots(len(row_names), 1, figsize=(8.0, 2.6 * len(row_names)), squeeze=False)
    for ax, name in zip(axes[:, 0], row_names):
        group = [r for r in (scenarios or baselines) if r["name"] == name]
        for run in group:
            xs = [e["step"] for e in run["episodes"]]
            ys = [e["episode_return"] for e in run["episodes"]]
            ax.plot(xs, ys, color="black", alpha=0.7, linewidth=1.0,
                    label=f"{name} seed {run['seed']}")
            for b in run["phase_boundaries"][:-1]:
                ax.axvline(b, color="gray", linestyle=":", linewidth=0.8)
        if scenarios:
            for run in baselines:
                xs = [e["step"] for e in run["episodes"]]
                ys = [e["episode_return"] for e in run["episodes"]]
                ax.plot(xs, ys, color="red", alpha=0.6, linewidth=1.0,
                        label=f"{run['name']} seed {run['seed']}")
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("environment steps")
        ax.set_ylabel("episode return")
        ax.legend(fontsize=6, loc="upper left")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def write_report(run_dirs, out_dir: Path) -> tuple[Path, Path]:
    if not run_dirs:
        raise MissingRuns("no run directories given")
    runs = [load_run(d) for d in run_dirs]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_combined_csv(runs, out_dir / "combined.csv")
    svg_path = write_reward_figure(runs, out_dir / "reward_curves.svg")
    return csv_path, svg_path
