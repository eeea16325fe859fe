"""Figure rendering for benchmark and replay reports."""

from __future__ import annotations

import statistics
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .recording import FrameRecord, RecordingHeader
from .task import EpisodeMetrics


def write_benchmark_figures(
    results: dict[str, list[EpisodeMetrics]], out_dir: str | Path
) -> list[Path]:
    """Mode-switch and completion-time comparisons, one PNG each."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    for agent, rows in results.items():
        switches = [r.mode_switches for r in rows]
        mean = statistics.mean(switches) if switches else 0.0
        ax.plot(range(len(switches)), switches, marker="o", markersize=3,
                linewidth=1, label=f"{agent} (mean {mean:.2f})")
    ax.set_xlabel("episode")
    ax.set_ylabel("mode switches")
    ax.set_title("Mode switches per episode")
    ax.legend()
    ax.grid(True, alpha=0.3)
    path = out_dir / "mode_switches.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    for agent, rows in results.items():
        times = [r.completion_time for r in rows]
        mean = statistics.mean(times) if times else 0.0
        ax.plot(range(len(times)), times, marker="o", markersize=3,
                linewidth=1, label=f"{agent} (mean {mean:.2f}s)")
    ax.set_xlabel("episode")
    ax.set_ylabel("completion time [s]")
    ax.set_title("Completion time per episode")
    ax.legend()
    ax.grid(True, alpha=0.3)
    path = out_dir / "completion_times.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    return written


def write_replay_figures(
    header: RecordingHeader, frames: list[FrameRecord], out_dir: str | Path
) -> list[Path]:
    """Top-down trajectory plus height and aperture timelines."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    times = [f.timestamp for f in frames]
    xs = [f.arm.position.x for f in frames]
    ys = [f.arm.position.y for f in frames]
    zs = [f.arm.position.z for f in frames]
    apertures = [f.finger_aperture for f in frames]
    episode_marks = [f.timestamp for f in frames if f.episode_end is not None]

    fig, (ax_xy, ax_t) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax_xy.plot(xs, ys, linewidth=1, color="tab:blue", label="end effector")
    for object_id in {oid for f in frames for oid, _ in f.object_poses}:
        ox = [dict(f.object_poses)[object_id].position.x for f in frames
              if object_id in dict(f.object_poses)]
        oy = [dict(f.object_poses)[object_id].position.y for f in frames
              if object_id in dict(f.object_poses)]
        ax_xy.plot(ox, oy, linewidth=1, linestyle="--", label=object_id)
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_title("Top-down trajectory")
    ax_xy.axis("equal")
    ax_xy.legend(fontsize=8)
    ax_xy.grid(True, alpha=0.3)

    ax_t.plot(times, zs, label="height [m]", color="tab:green")
    ax_t.plot(times, apertures, label="aperture", color="tab:orange")
    for mark in episode_marks:
        ax_t.axvline(mark, color="gray", alpha=0.4, linewidth=0.8)
    ax_t.set_xlabel("time [s]")
    ax_t.set_title("Height and finger aperture")
    ax_t.legend(fontsize=8)
    ax_t.grid(True, alpha=0.3)

    path = Path(out_dir) / "trajectory.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]
