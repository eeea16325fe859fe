"""The 7x7 mapping matrix, subset selection, mode switching, and input blending."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .geometry import Rotation, Vec3, Vec7, ZERO3, ZERO7


class IndexOutOfRange(ValueError):
    pass


class DuplicateIndex(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


DOF_COUNT = 7

SubsetIndex = int | None
Subset = tuple[SubsetIndex, ...]


@dataclass(frozen=True, slots=True)
class AdaptiveAxis:
    """One mapping column: a blended per-tick motion driven by a single input axis.

    translation is a gripper-frame displacement in meters per tick, rotation a
    body-frame delta per tick, gripper in [-1, 1] with + closing the fingers.
    """

    translation: Vec3 = ZERO3
    rotation: Rotation = Rotation.identity()
    gripper: float = 0.0

    @classmethod
    def zero(cls) -> "AdaptiveAxis":
        return cls()

    def to_vec7(self, max_translation: float, max_rotation: float) -> Vec7:
        """Normalize by the per-tick maxima into a [-1, 1] mapping column.

        Each block is norm-clamped (never component-clamped) so the motion
        direction survives saturation.
        """
        t = self.translation.scaled(1.0 / max_translation).clamped_norm(1.0)
        r = self.rotation.rotation_vector().scaled(1.0 / max_rotation).clamped_norm(1.0)
        g = max(-1.0, min(1.0, self.gripper))
        return Vec7(t.x, t.y, t.z, r.x, r.y, r.z, g)

    def dof_count(self, max_translation: float, max_rotation: float) -> int:
        return self.to_vec7(max_translation, max_rotation).nonzero_count()


def _cardinal_column(i: int) -> Vec7:
    values = [0.0] * DOF_COUNT
    values[i] = 1.0
    return Vec7(*values)


@dataclass(frozen=True, slots=True)
class DofMatrix:
    """Candidate mapping columns, ordered by decreasing usefulness."""

    columns: tuple[Vec7, ...]

    def __post_init__(self):
        if len(self.columns) != DOF_COUNT:
            raise DimensionMismatch(f"expected {DOF_COUNT} columns, got {len(self.columns)}")

    def column(self, i: int) -> Vec7:
        return self.columns[i]


def identity_matrix() -> DofMatrix:
    """Each input DoF mapped to a single cardinal output DoF."""
    return DofMatrix(tuple(_cardinal_column(i) for i in range(DOF_COUNT)))


@dataclass(frozen=True, slots=True)
class ControlState:
    matrix: DofMatrix
    active_subset: Subset
    mode_switch_count: int = 0


def _validate_subset(idx: Subset) -> Subset:
    subset = tuple(idx)
    seen = set()
    for i in subset:
        if i is None:
            continue  # empty column slot, mirrors the zero-movement mappings
        if not isinstance(i, int) or not 0 <= i < DOF_COUNT:
            raise IndexOutOfRange(f"column index {i!r} outside [0, {DOF_COUNT})")
        if i in seen:
            raise DuplicateIndex(f"column index {i} used twice")
        seen.add(i)
    return subset


def select_subset(matrix: DofMatrix, idx: Subset) -> ControlState:
    """Bind a subset of columns to the input device; not a mode switch."""
    return ControlState(matrix, _validate_subset(idx), 0)


def mode_switch(state: ControlState, new_idx: Subset) -> ControlState:
    """Exchange the active subset; counts only when the subset actually changes."""
    subset = _validate_subset(new_idx)
    count = state.mode_switch_count + (1 if subset != state.active_subset else 0)
    return replace(state, active_subset=subset, mode_switch_count=count)


def apply_input(state: ControlState, u: list[float] | tuple[float, ...]) -> Vec7:
    """Blend input intensities through the active columns into one command.

    The clamp runs after summation so combined commands keep their direction.
    """
    if len(u) != len(state.active_subset):
        raise DimensionMismatch(
            f"input has {len(u)} axes, active subset has {len(state.active_subset)}"
        )
    out = ZERO7
    for value, i in zip(u, state.active_subset):
        if i is None:
            continue
        out = out.added(state.matrix.column(i).scaled(value))
    return out.clamped(1.0)


def classic_control_config() -> tuple[Subset, ...]:
    """Two-axis cardinal mode ring covering all seven DoFs.

    The final mode pairs the gripper with an empty column, so mode count is
    ceil(7/2) = 4 and every cardinal DoF appears exactly once.
    """
    return ((0, 1), (2, 3), (4, 5), (6, None))
