"""Frame-aware vector and rotation algebra plus the 7-DoF similarity measures.

Everything here is a plain value type: immutable, hashable where useful, and
safe to call from any thread. Quaternions are the only internal rotation
representation; Euler-style data appears solely at serialization boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class ZeroDirection(ValueError):
    """A direction was requested from a vector with (near-)zero length."""


class ZeroVector(ValueError):
    """Cosine similarity of a zero 7-vector is undefined."""


class FrameMismatch(ValueError):
    """Poses from incompatible reference frames were combined."""


class Frame(Enum):
    WORLD = "world"
    GRIPPER = "gripper"


_DEGENERATE_NORM = 1e-9


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def norm_xy(self) -> float:
        """Length of the projection onto the horizontal (XY) plane."""
        return math.hypot(self.x, self.y)

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n <= _DEGENERATE_NORM:
            raise ZeroDirection(f"cannot normalize near-zero vector {self}")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def clamped_norm(self, limit: float) -> "Vec3":
        """Scale down (never up) so the length does not exceed ``limit``."""
        n = self.norm()
        if n <= limit or n == 0.0:
            return self
        return self.scaled(limit / n)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ZERO3 = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class Rotation:
    """Unit quaternion (w, x, y, z), canonicalized to w >= 0.

    Construct through the classmethods; they normalize and fix the
    double-cover sign so equal rotations compare equal.
    """

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_components(cls, w: float, x: float, y: float, z: float) -> "Rotation":
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n <= _DEGENERATE_NORM:
            raise ZeroDirection("cannot normalize near-zero quaternion")
        w, x, y, z = w / n, x / n, y / n, z / n
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        return cls(w, x, y, z)

    @classmethod
    def from_axis_angle(cls, axis: Vec3, angle: float) -> "Rotation":
        if abs(angle) <= _DEGENERATE_NORM:
            return cls.identity()
        u = axis.normalized()
        half = 0.5 * angle
        s = math.sin(half)
        return cls.from_components(math.cos(half), u.x * s, u.y * s, u.z * s)

    @classmethod
    def from_rotation_vector(cls, rv: Vec3) -> "Rotation":
        angle = rv.norm()
        if angle <= _DEGENERATE_NORM:
            # First-order small-angle quaternion keeps tiny steps exact enough.
            return cls.from_components(1.0, 0.5 * rv.x, 0.5 * rv.y, 0.5 * rv.z)
        return cls.from_axis_angle(rv, angle)

    def __mul__(self, other: "Rotation") -> "Rotation":
        """Hamilton product: (self * other) applies ``other`` first."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation.from_components(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def inverse(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def apply(self, v: Vec3) -> Vec3:
        # v' = q v q* expanded via the classic two-cross-product form.
        qv = Vec3(self.x, self.y, self.z)
        t = qv.cross(v).scaled(2.0)
        return v + t.scaled(self.w) + qv.cross(t)

    def angle(self) -> float:
        """Rotation angle in [0, pi]."""
        s = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        return 2.0 * math.atan2(s, self.w)

    def rotation_vector(self) -> Vec3:
        """Axis * angle; zero vector for the identity."""
        s = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if s <= _DEGENERATE_NORM:
            return Vec3(2.0 * self.x, 2.0 * self.y, 2.0 * self.z)
        angle = 2.0 * math.atan2(s, self.w)
        return Vec3(self.x / s, self.y / s, self.z / s).scaled(angle)

    def scaled(self, fraction: float) -> "Rotation":
        """Rotation by ``fraction`` of this rotation's angle about its axis."""
        return Rotation.from_rotation_vector(self.rotation_vector().scaled(fraction))

    def angle_to(self, other: "Rotation") -> float:
        """Geodesic angle between two rotations."""
        return (self.inverse() * other).angle()

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


@dataclass(frozen=True, slots=True)
class Pose:
    position: Vec3 = ZERO3
    orientation: Rotation = Rotation.identity()
    frame: Frame = Frame.WORLD

    def compose(self, local: "Pose") -> "Pose":
        """World pose of a gripper-frame child attached to this world pose."""
        if self.frame is not Frame.WORLD or local.frame is not Frame.GRIPPER:
            raise FrameMismatch("compose expects world parent and gripper-frame child")
        return Pose(
            self.position + self.orientation.apply(local.position),
            self.orientation * local.orientation,
            Frame.WORLD,
        )

    def relative_to(self, parent: "Pose") -> "Pose":
        """Express this world pose in the gripper frame of ``parent``."""
        if self.frame is not Frame.WORLD or parent.frame is not Frame.WORLD:
            raise FrameMismatch("relative_to expects two world poses")
        inv = parent.orientation.inverse()
        return Pose(
            inv.apply(self.position - parent.position),
            inv * self.orientation,
            Frame.GRIPPER,
        )


FORWARD_AXIS = Vec3(1.0, 0.0, 0.0)


def rotation_from_forward(direction: Vec3) -> Rotation:
    """Zero-roll rotation carrying the canonical forward axis (+X) onto ``direction``.

    Yaw about Z followed by pitch about the rotated Y; no roll is introduced,
    so repeated re-aiming keeps the gripper level.
    """
    n = direction.norm()
    if n <= _DEGENERATE_NORM:
        raise ZeroDirection("cannot aim along a near-zero direction")
    yaw = math.atan2(direction.y, direction.x)
    pitch = -math.asin(max(-1.0, min(1.0, direction.z / n)))
    qz = Rotation.from_axis_angle(Vec3(0.0, 0.0, 1.0), yaw)
    qy = Rotation.from_axis_angle(Vec3(0.0, 1.0, 0.0), pitch)
    return qz * qy


def to_gripper_frame(v: Vec3, gripper: Rotation) -> Vec3:
    """World vector expressed in the gripper's reference frame."""
    return gripper.inverse().apply(v)


def to_world_frame(v: Vec3, gripper: Rotation) -> Vec3:
    """Gripper-frame vector expressed in the world frame."""
    return gripper.apply(v)


class Vec7(NamedTuple):
    """One 7-DoF mapping or command: (tx, ty, tz, roll, pitch, yaw, gripper)."""

    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    gripper: float = 0.0

    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self))

    def dot(self, other: "Vec7") -> float:
        return sum(a * b for a, b in zip(self, other))

    def scaled(self, s: float) -> "Vec7":
        return Vec7(*(c * s for c in self))

    def added(self, other: "Vec7") -> "Vec7":
        return Vec7(*(a + b for a, b in zip(self, other)))

    def clamped(self, limit: float = 1.0) -> "Vec7":
        return Vec7(*(max(-limit, min(limit, c)) for c in self))

    def nonzero_count(self, eps: float = 1e-12) -> int:
        return sum(1 for c in self if abs(c) > eps)

    def is_zero(self, eps: float = 0.0) -> bool:
        return all(abs(c) <= eps for c in self)


ZERO7 = Vec7()


def cosine_similarity(a: Vec7, b: Vec7) -> float:
    """Normalized dot product of two 7-vectors, clamped to [-1, 1]."""
    na = a.norm()
    nb = b.norm()
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity needs two nonzero vectors")
    c = a.dot(b) / (na * nb)
    return max(-1.0, min(1.0, c))


def difference(a: Vec7, b: Vec7) -> float:
    """Directional difference in [0, 1]: 0 identical, 0.5 orthogonal, 1 opposed."""
    return 1.0 - (cosine_similarity(a, b) + 1.0) / 2.0
