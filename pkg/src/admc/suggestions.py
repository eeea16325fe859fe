"""Script-based rule engine: ranked movement suggestions from a scene snapshot.

The engine is a pure function of its snapshot. Identical snapshots yield
identical suggestion sets, which is what makes recordings replayable and the
engine swappable for a learned provider behind the same call signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .dofmap import AdaptiveAxis, DOF_COUNT, DofMatrix
from .geometry import (
    Pose,
    Rotation,
    Vec3,
    ZERO3,
    ZERO7,
    rotation_from_forward,
    to_gripper_frame,
)

# Below this separation the aiming direction is numerically meaningless.
DEGENERATE_DISTANCE = 1e-6


class TargetKind(Enum):
    PICK_OBJECT = "pick_object"
    DROP_AREA = "drop_area"


class SuggestionLabel(Enum):
    OPTIMAL = "Optimal"
    ADJUSTMENT = "Adjustment"
    TRANSLATION = "Translation"
    ROTATION = "Rotation"
    GRIPPER = "Gripper"


@dataclass(frozen=True, slots=True)
class EngineParams:
    """Tuning of the scripted engine; displacements are per tick.

    minimal_hover_distance and hover_height shape the approach: far targets
    are approached via a point lifted above them so the gripper can rotate
    without scraping the table, near targets are descended onto directly.
    """

    minimal_hover_distance: float = 0.2
    hover_height: float = 0.15
    vel_trans: float = 0.004
    vel_rot: float = 0.03
    reach_radius: float = 0.05
    rotation_scale: float = 0.1

    def __post_init__(self):
        for name in ("minimal_hover_distance", "hover_height", "vel_trans",
                     "vel_rot", "reach_radius", "rotation_scale"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rotation_scale > 1.0:
            raise ValueError("rotation_scale must be in (0, 1]")


@dataclass(frozen=True, slots=True)
class SceneSnapshot:
    gripper_pose: Pose
    finger_aperture: float
    held_object: str | None
    current_target_pose: Pose
    current_target_kind: TargetKind
    params: EngineParams


@dataclass(frozen=True, slots=True)
class Suggestion:
    label: SuggestionLabel
    axis: AdaptiveAxis


@dataclass(frozen=True, slots=True)
class SuggestionSet:
    """Suggestions ranked by combined-DoF count, non-increasing."""

    ranked: tuple[Suggestion, ...]

    def by_label(self, label: SuggestionLabel) -> Suggestion:
        for s in self.ranked:
            if s.label is label:
                return s
        raise KeyError(label)

    def labels(self) -> tuple[str, ...]:
        return tuple(s.label.value for s in self.ranked)

    def to_matrix(self, params: EngineParams) -> DofMatrix:
        columns = [s.axis.to_vec7(params.vel_trans, params.vel_rot) for s in self.ranked]
        while len(columns) < DOF_COUNT:
            columns.append(ZERO7)
        return DofMatrix(tuple(columns))


RuleEngine = Callable[[SceneSnapshot], SuggestionSet]


def compute_target_point(snap: SceneSnapshot) -> Vec3:
    """Aim point: lifted above the target while far, the target itself when near."""
    target = snap.current_target_pose.position
    offset = snap.gripper_pose.position - target
    if offset.norm_xy() >= snap.params.minimal_hover_distance:
        return target + Vec3(0.0, 0.0, snap.params.hover_height)
    return target


def gripper_component(snap: SceneSnapshot) -> float:
    """-1 release / +1 grasp when the target point is within finger reach, else 0."""
    point = compute_target_point(snap)
    dist = (point - snap.gripper_pose.position).norm()
    if dist > snap.params.reach_radius:
        return 0.0
    return -1.0 if snap.held_object is not None else 1.0


def _aim_rotation(current: Rotation, direction: Vec3, scale: float) -> Rotation:
    """Per-tick fraction of the delta onto the zero-roll aim orientation."""
    target = rotation_from_forward(direction)
    delta = current.inverse() * target
    return delta.scaled(scale)


def _step_toward(snap: SceneSnapshot, point: Vec3) -> tuple[Vec3, Rotation]:
    """Gripper-frame translation and rotation delta toward a world point.

    The translation magnitude is capped by the remaining distance so the
    approach settles on the point instead of orbiting it at full speed.
    """
    offset = point - snap.gripper_pose.position
    dist = offset.norm()
    if dist < DEGENERATE_DISTANCE:
        return ZERO3, Rotation.identity()
    direction = offset.normalized()
    magnitude = min(snap.params.vel_trans, dist)
    translation = to_gripper_frame(direction, snap.gripper_pose.orientation).scaled(magnitude)
    rotation = _aim_rotation(snap.gripper_pose.orientation, direction, snap.params.rotation_scale)
    return translation, rotation


def optimal_suggestion(snap: SceneSnapshot) -> AdaptiveAxis:
    """Translation, rotation, and finger motion blended toward the target point."""
    translation, rotation = _step_toward(snap, compute_target_point(snap))
    return AdaptiveAxis(translation, rotation, gripper_component(snap))


def adjustment_suggestion(optimal: AdaptiveAxis) -> AdaptiveAxis:
    """Orthogonal position-adjustment variant of the optimal suggestion.

    The translation is the optimal one swung 90 degrees about the gripper's
    Y axis with the Y-parallel part dropped (exactly the cross product
    y-hat x t), which keeps it strictly perpendicular to the optimal motion.
    Rotation is shared so the fingers stay aimed at the target; no finger motion.
    """
    t = optimal.translation
    return AdaptiveAxis(Vec3(t.z, 0.0, -t.x), optimal.rotation, 0.0)


def translation_suggestion(snap: SceneSnapshot) -> AdaptiveAxis:
    """Pure translation toward the target itself, ignoring the hover point."""
    offset = snap.current_target_pose.position - snap.gripper_pose.position
    dist = offset.norm()
    if dist < DEGENERATE_DISTANCE:
        return AdaptiveAxis.zero()
    magnitude = min(snap.params.vel_trans, dist)
    translation = to_gripper_frame(offset.normalized(), snap.gripper_pose.orientation)
    return AdaptiveAxis(translation.scaled(magnitude), Rotation.identity(), 0.0)


def rotation_suggestion(snap: SceneSnapshot) -> AdaptiveAxis:
    """Pure rotation toward the target, no translation or finger motion."""
    offset = snap.current_target_pose.position - snap.gripper_pose.position
    if offset.norm() < DEGENERATE_DISTANCE:
        return AdaptiveAxis.zero()
    rotation = _aim_rotation(
        snap.gripper_pose.orientation, offset.normalized(), snap.params.rotation_scale
    )
    return AdaptiveAxis(ZERO3, rotation, 0.0)


def gripper_suggestion(snap: SceneSnapshot) -> AdaptiveAxis:
    """Open when holding, close otherwise."""
    return AdaptiveAxis(ZERO3, Rotation.identity(), -1.0 if snap.held_object else 1.0)


def evaluate(snap: SceneSnapshot) -> SuggestionSet:
    """Compute all five suggestions and rank them by combined-DoF count.

    The sort is stable with the fixed emission order (Optimal, Adjustment,
    Translation, Rotation, Gripper) breaking ties, so equal-count suggestions
    keep a deterministic ranking.
    """
    optimal = optimal_suggestion(snap)
    emitted = (
        Suggestion(SuggestionLabel.OPTIMAL, optimal),
        Suggestion(SuggestionLabel.ADJUSTMENT, adjustment_suggestion(optimal)),
        Suggestion(SuggestionLabel.TRANSLATION, translation_suggestion(snap)),
        Suggestion(SuggestionLabel.ROTATION, rotation_suggestion(snap)),
        Suggestion(SuggestionLabel.GRIPPER, gripper_suggestion(snap)),
    )
    p = snap.params
    ranked = tuple(
        sorted(emitted, key=lambda s: -s.axis.dof_count(p.vel_trans, p.vel_rot))
    )
    counts = [s.axis.dof_count(p.vel_trans, p.vel_rot) for s in ranked]
    assert all(a >= b for a, b in zip(counts, counts[1:])), counts
    return SuggestionSet(ranked)
