"""Pick-and-place testbed: blue block, red drop area, success detection, respawn."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .arm import ArmState, GRASPABLE_TAG, SceneObject, projected_half_extents
from .geometry import Pose, Rotation, Vec3
from .suggestions import TargetKind

BLOCK_ID = "block"


class TaskPhase(Enum):
    APPROACH = "approach"
    CARRY = "carry"
    DONE = "done"


@dataclass(frozen=True, slots=True)
class TaskLayout:
    """Table-top geometry. The table surface is the world plane z = 0."""

    table_half: Vec3 = Vec3(0.6, 0.4, 0.0)
    drop_center: Vec3 = Vec3(0.3, -0.25, 0.0)
    drop_half: Vec3 = Vec3(0.075, 0.075, 0.0)
    arm_base: Vec3 = Vec3(-0.55, 0.0, 0.0)
    base_margin: float = 0.18
    block_half: float = 0.0225
    spawn_inset: float = 0.06
    placement_tolerance: float = 0.005

    def in_drop_area(self, p: Vec3, margin: float = 0.0) -> bool:
        return (
            abs(p.x - self.drop_center.x) <= self.drop_half.x + margin
            and abs(p.y - self.drop_center.y) <= self.drop_half.y + margin
        )


@dataclass(frozen=True, slots=True)
class EpisodeMetrics:
    episode: int
    ticks: int
    completion_time: float
    mode_switches: int
    suggestions_accepted: int


@dataclass(slots=True)
class Metrics:
    """Aggregate counters; monotone within a run."""

    episodes_completed: int = 0
    mode_switches: int = 0
    suggestions_accepted: int = 0
    completion_time: float = 0.0


@dataclass(slots=True)
class TaskState:
    layout: TaskLayout
    rng: random.Random
    phase: TaskPhase = TaskPhase.APPROACH
    episode: int = 0
    episode_start_tick: int = 0
    episode_mode_switches: int = 0
    episode_suggestions_accepted: int = 0
    totals: Metrics = field(default_factory=Metrics)
    history: list[EpisodeMetrics] = field(default_factory=list)


def make_block(layout: TaskLayout, position: Vec3) -> SceneObject:
    h = layout.block_half
    return SceneObject(
        object_id=BLOCK_ID,
        pose=Pose(position),
        half_extents=Vec3(h, h, h),
        tags=frozenset((GRASPABLE_TAG, "Blue")),
        movable=True,
    )


def sample_spawn(layout: TaskLayout, rng: random.Random) -> Vec3:
    """Uniform spawn on the table, outside the drop area and the arm base margin."""
    x_lo = -layout.table_half.x + layout.spawn_inset
    x_hi = layout.table_half.x - layout.spawn_inset
    y_lo = -layout.table_half.y + layout.spawn_inset
    y_hi = layout.table_half.y - layout.spawn_inset
    while True:
        p = Vec3(rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi), layout.block_half)
        if layout.in_drop_area(p, margin=layout.block_half):
            continue
        if (p - Vec3(layout.arm_base.x, layout.arm_base.y, p.z)).norm_xy() < layout.base_margin:
            continue
        return p


def new_task(layout: TaskLayout, seed: int) -> tuple[TaskState, SceneObject]:
    rng = random.Random(seed)
    task = TaskState(layout=layout, rng=rng)
    return task, make_block(layout, sample_spawn(layout, rng))


def current_target(task: TaskState, block: SceneObject, held: bool) -> tuple[Pose, TargetKind]:
    """The block while empty-handed, the drop area while carrying."""
    if held:
        return Pose(task.layout.drop_center), TargetKind.DROP_AREA
    return block.pose, TargetKind.PICK_OBJECT


def placement_complete(task: TaskState, arm: ArmState, block: SceneObject) -> bool:
    if arm.held is not None:
        return False
    layout = task.layout
    p = block.pose.position
    if not layout.in_drop_area(p):
        return False
    # Lowest point of the (possibly tilted) block must rest on the table.
    base_z = p.z - projected_half_extents(Rotation.identity(), block).z
    return abs(base_z) <= layout.placement_tolerance


def check_success(
    task: TaskState,
    arm: ArmState,
    block: SceneObject,
    tick: int,
    tick_rate: float,
) -> tuple[bool, SceneObject, EpisodeMetrics | None]:
    """Detect completion, roll episode metrics, and respawn the block.

    Mutates the task state (owned by the tick loop). Returns whether the
    episode completed this tick, the (possibly respawned) block, and the
    completed episode's metrics row.
    """
    task.phase = TaskPhase.CARRY if arm.held is not None else TaskPhase.APPROACH
    if not placement_complete(task, arm, block):
        return False, block, None

    ticks = tick - task.episode_start_tick + 1
    row = EpisodeMetrics(
        episode=task.episode,
        ticks=ticks,
        completion_time=ticks / tick_rate,
        mode_switches=task.episode_mode_switches,
        suggestions_accepted=task.episode_suggestions_accepted,
    )
    task.history.append(row)
    task.totals.episodes_completed += 1
    task.totals.mode_switches += row.mode_switches
    task.totals.suggestions_accepted += row.suggestions_accepted
    task.totals.completion_time += row.completion_time

    task.episode += 1
    task.episode_start_tick = tick + 1
    task.episode_mode_switches = 0
    task.episode_suggestions_accepted = 0
    task.phase = TaskPhase.APPROACH

    respawned = replace(block, pose=Pose(sample_spawn(task.layout, task.rng)))
    return True, respawned, row
