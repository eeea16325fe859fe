"""End-effector level arm simulation: command integration, follow-me, grasping.

There is no joint chain and no physics engine; the end effector is the
authoritative frame and grasping is logic-based. Objects other than a held
one never move.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .geometry import Frame, Pose, Rotation, Vec3, Vec7, ZERO3

GRASPABLE_TAG = "Graspable"

# Gripper geometry for the two-finger contact test. The fingers open to a
# 0.12 m span at aperture 1 and close symmetrically about the TCP.
MAX_FINGER_SPAN = 0.12
FINGER_REACH_HALF = 0.03
FINGER_HEIGHT_HALF = 0.02
GRASP_GAP_TOLERANCE = 0.002


@dataclass(frozen=True, slots=True)
class VelocityLimits:
    vel_trans: float = 0.2      # m/s
    vel_rot: float = 1.5        # rad/s
    vel_fingers: float = 1.5    # aperture/s

    def __post_init__(self):
        if min(self.vel_trans, self.vel_rot, self.vel_fingers) <= 0.0:
            raise ValueError("velocity limits must be strictly positive")


@dataclass(frozen=True, slots=True)
class Workspace:
    """Axis-aligned reachable box; commands are clamped, never rejected."""

    lo: Vec3 = Vec3(-0.7, -0.5, 0.0)
    hi: Vec3 = Vec3(0.7, 0.5, 0.9)

    def clamp(self, p: Vec3) -> Vec3:
        return Vec3(
            max(self.lo.x, min(self.hi.x, p.x)),
            max(self.lo.y, min(self.hi.y, p.y)),
            max(self.lo.z, min(self.hi.z, p.z)),
        )


@dataclass(frozen=True, slots=True)
class SceneObject:
    object_id: str
    pose: Pose
    half_extents: Vec3
    tags: frozenset[str] = frozenset()
    movable: bool = False

    @property
    def graspable(self) -> bool:
        return GRASPABLE_TAG in self.tags


@dataclass(frozen=True, slots=True)
class HeldObject:
    object_id: str
    relative: Pose  # gripper-frame pose recorded at attach time


@dataclass(frozen=True, slots=True)
class ArmState:
    end_effector: Pose
    finger_aperture: float = 1.0
    held: HeldObject | None = None
    limits: VelocityLimits = VelocityLimits()


def step(arm: ArmState, cmd: Vec7, dt: float, workspace: Workspace) -> ArmState:
    """Integrate one velocity command over dt.

    Translation is commanded in the gripper frame and applied in the world;
    per-tick translation and rotation deltas are norm-clamped by the limits
    so combined commands keep their direction.
    """
    cmd = cmd.clamped(1.0)
    lim = arm.limits

    max_t = lim.vel_trans * dt
    local = Vec3(cmd.tx, cmd.ty, cmd.tz).scaled(max_t).clamped_norm(max_t)
    position = workspace.clamp(
        arm.end_effector.position + arm.end_effector.orientation.apply(local)
    )

    max_r = lim.vel_rot * dt
    rv = Vec3(cmd.roll, cmd.pitch, cmd.yaw).scaled(max_r).clamped_norm(max_r)
    orientation = arm.end_effector.orientation * Rotation.from_rotation_vector(rv)

    # Positive gripper command closes: aperture runs from 1 (open) to 0.
    aperture = arm.finger_aperture - cmd.gripper * lim.vel_fingers * dt
    aperture = max(0.0, min(1.0, aperture))

    return replace(
        arm,
        end_effector=Pose(position, orientation, Frame.WORLD),
        finger_aperture=aperture,
    )


def follow_me(arm: ArmState, target: Pose, workspace: Workspace) -> ArmState:
    """Snap the end effector onto a tracked pose (workspace-clamped)."""
    pose = Pose(workspace.clamp(target.position), target.orientation, Frame.WORLD)
    return replace(arm, end_effector=pose)


def carried_pose(arm: ArmState) -> Pose | None:
    """World pose of the held object, rigidly attached to the end effector."""
    if arm.held is None:
        return None
    return arm.end_effector.compose(arm.held.relative)


def sync_held_object(arm: ArmState, objects: dict[str, SceneObject]) -> dict[str, SceneObject]:
    """Carry the held object along with the end effector."""
    pose = carried_pose(arm)
    if pose is None:
        return objects
    held_id = arm.held.object_id
    updated = dict(objects)
    updated[held_id] = replace(updated[held_id], pose=pose)
    return updated


def projected_half_extents(frame: Rotation, obj: SceneObject) -> Vec3:
    """Half extents of the object's box projected onto a gripper frame's axes."""
    inv = frame.inverse()
    h = obj.half_extents
    cols = [
        inv.apply(obj.pose.orientation.apply(axis))
        for axis in (Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1))
    ]
    return Vec3(
        abs(cols[0].x) * h.x + abs(cols[1].x) * h.y + abs(cols[2].x) * h.z,
        abs(cols[0].y) * h.x + abs(cols[1].y) * h.y + abs(cols[2].y) * h.z,
        abs(cols[0].z) * h.x + abs(cols[1].z) * h.y + abs(cols[2].z) * h.z,
    )


def finger_contact(arm: ArmState, obj: SceneObject) -> bool:
    """Both fingers touch the object: the closing gap has reached its width
    and the object sits between the fingers within the finger volume."""
    q = arm.end_effector.orientation
    local = q.inverse().apply(obj.pose.position - arm.end_effector.position)
    w = projected_half_extents(q, obj)
    gap_half = arm.finger_aperture * MAX_FINGER_SPAN / 2.0
    if w.y - abs(local.y) + GRASP_GAP_TOLERANCE < gap_half:
        return False
    if abs(local.x) > FINGER_REACH_HALF + w.x:
        return False
    if abs(local.z) > FINGER_HEIGHT_HALF + w.z:
        return False
    return True


def rest_on_plane(obj: SceneObject, plane_z: float = 0.0) -> SceneObject:
    """Drop the object straight down (or up) so its base sits on the plane."""
    w = projected_half_extents(Rotation.identity(), obj)
    p = obj.pose.position
    return replace(obj, pose=Pose(Vec3(p.x, p.y, plane_z + w.z), obj.pose.orientation))


def grasp_check(
    arm: ArmState,
    previous_aperture: float,
    objects: dict[str, SceneObject],
    table_z: float = 0.0,
    commanded_gripper: float = 0.0,
) -> tuple[ArmState, dict[str, SceneObject]]:
    """Attach on two-opposite-finger contact while closing; release on opening.

    Runs once per tick after step(). "Closing" is the commanded action, so a
    gripper squeezing at the aperture floor still grasps; externally driven
    apertures (twin, follow-me) count through their measured change instead.
    Released objects keep their world pose except for settling onto the
    table plane. Non-graspable objects are never attached.
    """
    closing = arm.finger_aperture < previous_aperture or commanded_gripper > 1e-9
    opening = arm.finger_aperture > previous_aperture or commanded_gripper < -1e-9

    if arm.held is not None:
        if opening:
            held_id = arm.held.object_id
            updated = dict(objects)
            updated[held_id] = rest_on_plane(updated[held_id], table_z)
            return replace(arm, held=None), updated
        return arm, objects

    if closing:
        for obj in objects.values():
            if not (obj.graspable and obj.movable):
                continue
            if finger_contact(arm, obj):
                relative = obj.pose.relative_to(arm.end_effector)
                return replace(arm, held=HeldObject(obj.object_id, relative)), objects
    return arm, objects
