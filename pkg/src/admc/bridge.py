"""Bidirectional state mirroring between the simulation and an external arm.

Roles: PhysicalTwin (the simulation drives the external arm through
velocity-clamped end-effector commands) and DigitalTwin (the external arm
drives the simulation). Only end-effector poses and finger angles cross the
wire; joint-level data never does.

Wire protocol: length-prefixed textual messages over a persistent duplex
socket. Each message is an ASCII decimal byte length, a newline, then a JSON
payload with a "kind" field of HELLO, POSE, CMD, or LIMITS. The wire frame is
right-handed; the simulation's internal frame is left-handed, so Y flips.
"""

from __future__ import annotations

import json
import math
import socket
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

from .arm import VelocityLimits
from .geometry import Frame, Pose, Rotation, Vec3

# Fully closed finger angle in radians; aperture maps linearly onto it.
FINGER_CLOSED_ANGLE = 1.4

DEFAULT_SYNC_PERIOD = 0.1


class BridgeRole(Enum):
    PHYSICAL_TWIN = "physical"   # simulation drives the external arm
    DIGITAL_TWIN = "digital"     # external arm drives the simulation


@dataclass(frozen=True, slots=True)
class BridgeConfig:
    role: BridgeRole
    endpoint: tuple[str, int] | None = None
    sync_period: float = DEFAULT_SYNC_PERIOD
    external_limits: VelocityLimits = VelocityLimits()

    def __post_init__(self):
        if self.sync_period <= 0.0:
            raise ValueError("sync_period must be positive")


@dataclass(frozen=True, slots=True)
class WirePose:
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    fingers: tuple[float, float, float]


def _mirror_quaternion(w: float, x: float, y: float, z: float) -> tuple[float, float, float, float]:
    # Conjugation by the XZ-plane mirror: the in-plane vector components
    # flip, the component along the mirror normal (Y) survives.
    return (w, -x, y, -z)


def to_wire(pose: Pose, aperture: float) -> WirePose:
    """Internal left-handed pose to the right-handed wire frame."""
    p = pose.position
    q = pose.orientation
    angle = (1.0 - aperture) * FINGER_CLOSED_ANGLE
    return WirePose(
        position=(p.x, -p.y, p.z),
        orientation=_mirror_quaternion(q.w, q.x, q.y, q.z),
        fingers=(angle, angle, angle),
    )


def from_wire(wire: WirePose) -> tuple[Pose, float]:
    """Right-handed wire pose back into the internal frame; fingers averaged."""
    px, py, pz = wire.position
    w, x, y, z = _mirror_quaternion(*wire.orientation)
    aperture = 1.0 - (sum(wire.fingers) / 3.0) / FINGER_CLOSED_ANGLE
    return Pose(Vec3(px, -py, pz), Rotation(w, x, y, z), Frame.WORLD), aperture


def wire_pose_to_json(wire: WirePose) -> dict:
    return {
        "position": list(wire.position),
        "orientation": list(wire.orientation),
        "fingers": list(wire.fingers),
    }


def wire_pose_from_json(data: dict) -> WirePose:
    return WirePose(
        position=tuple(float(v) for v in data["position"]),
        orientation=tuple(float(v) for v in data["orientation"]),
        fingers=tuple(float(v) for v in data["fingers"]),
    )


def encode_message(kind: str, body: dict) -> bytes:
    payload = json.dumps({"kind": kind, **body}, separators=(",", ":")).encode("utf-8")
    return str(len(payload)).encode("ascii") + b"\n" + payload


class MessageDecoder:
    """Incremental decoder for the length-prefixed framing."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        self._buffer.extend(data)
        messages = []
        while True:
            newline = self._buffer.find(b"\n")
            if newline < 0:
                break
            length = int(self._buffer[:newline])
            start = newline + 1
            if len(self._buffer) < start + length:
                break
            payload = bytes(self._buffer[start:start + length])
            del self._buffer[:start + length]
            messages.append(json.loads(payload))
        return messages


def step_pose_toward(
    current: Pose,
    current_aperture: float,
    target: Pose,
    target_aperture: float,
    limits: VelocityLimits,
    period: float,
) -> tuple[Pose, float]:
    """Advance toward a target pose without exceeding the limits over one period."""
    offset = target.position - current.position
    position = current.position + offset.clamped_norm(limits.vel_trans * period)

    delta = current.orientation.inverse() * target.orientation
    max_angle = limits.vel_rot * period
    angle = delta.angle()
    if angle > max_angle:
        delta = delta.scaled(max_angle / angle)
    orientation = current.orientation * delta

    max_fingers = limits.vel_fingers * period
    move = max(-max_fingers, min(max_fingers, target_aperture - current_aperture))
    aperture = min(1.0, max(0.0, current_aperture + move))

    return Pose(position, orientation, Frame.WORLD), aperture


@dataclass(frozen=True, slots=True)
class FollowExternal:
    """Command for the tick loop: overwrite the sim arm from the external pose."""

    pose: Pose
    aperture: float


class Bridge:
    """Protocol state machine for one twin link; transport-agnostic.

    The owner feeds inbound messages and polls sync_tick once per period.
    sync_tick returns outbound wire messages and, in DigitalTwin role, a
    FollowExternal command for the simulation.
    """

    def __init__(self, config: BridgeConfig):
        self.config = config
        self.external_limits = config.external_limits
        self._external: tuple[Pose, float] | None = None
        self._commanded: tuple[Pose, float] | None = None

    def hello_message(self) -> bytes:
        return encode_message("HELLO", {"role": self.config.role.value})

    def handle_message(self, message: dict) -> None:
        kind = message.get("kind")
        if kind == "POSE":
            self._external = from_wire(wire_pose_from_json(message))
        elif kind == "LIMITS":
            self.external_limits = VelocityLimits(
                vel_trans=float(message["vel_trans"]),
                vel_rot=float(message["vel_rot"]),
                vel_fingers=float(message["vel_fingers"]),
            )
        elif kind == "HELLO":
            pass
        # Unknown kinds and extra fields are ignored: the wire carries only
        # end-effector data for this artifact.

    @property
    def external_state(self) -> tuple[Pose, float] | None:
        return self._external

    def reset(self) -> None:
        """Forget the conversation after a disconnect; rehandshake on reconnect."""
        self._external = None
        self._commanded = None

    def sync_tick(
        self, sim_pose: Pose, sim_aperture: float
    ) -> tuple[list[bytes], FollowExternal | None]:
        if self.config.role is BridgeRole.DIGITAL_TWIN:
            if self._external is None:
                return [], None
            pose, aperture = self._external
            return [], FollowExternal(pose, aperture)

        # PhysicalTwin: command the external arm toward the sim pose, but no
        # faster than the physical characteristics allow per sync period.
        if self._commanded is None:
            base = self._external if self._external is not None else (sim_pose, sim_aperture)
            self._commanded = base
        pose, aperture = step_pose_toward(
            self._commanded[0],
            self._commanded[1],
            sim_pose,
            sim_aperture,
            self.external_limits,
            self.config.sync_period,
        )
        self._commanded = (pose, aperture)
        return [encode_message("CMD", wire_pose_to_json(to_wire(pose, aperture)))], None


class FakeExternalArm:
    """Stand-in for a physical arm: follows commands under its own limits,
    or plays a scripted trajectory. Speaks in wire frames only."""

    def __init__(
        self,
        limits: VelocityLimits = VelocityLimits(),
        pose: Pose = Pose(Vec3(0, 0, 0.3)),
        aperture: float = 1.0,
        script: Callable[[float], tuple[Pose, float]] | None = None,
    ):
        self.limits = limits
        self.pose = pose
        self.aperture = aperture
        self.script = script
        self.time = 0.0
        self._target: tuple[Pose, float] | None = None

    def handle_message(self, message: dict) -> None:
        if message.get("kind") == "CMD":
            self._target = from_wire(wire_pose_from_json(message))

    def advance(self, dt: float) -> None:
        self.time += dt
        if self.script is not None:
            self.pose, self.aperture = self.script(self.time)
            return
        if self._target is not None:
            self.pose, self.aperture = step_pose_toward(
                self.pose, self.aperture, self._target[0], self._target[1],
                self.limits, dt,
            )

    def pose_message(self) -> bytes:
        return encode_message("POSE", wire_pose_to_json(to_wire(self.pose, self.aperture)))

    def limits_message(self) -> bytes:
        return encode_message(
            "LIMITS",
            {
                "vel_trans": self.limits.vel_trans,
                "vel_rot": self.limits.vel_rot,
                "vel_fingers": self.limits.vel_fingers,
            },
        )


def sine_script(amplitude: float = 0.2, frequency: float = 0.5,
                center: Vec3 = Vec3(0.0, 0.0, 0.3)) -> Callable[[float], tuple[Pose, float]]:
    def script(t: float) -> tuple[Pose, float]:
        offset = Vec3(amplitude * math.sin(2 * math.pi * frequency * t), 0.0, 0.0)
        return Pose(center + offset), 1.0
    return script


class BridgeLink:
    """Socket transport for a Bridge: reader thread plus sender.

    On disconnect the simulation continues standalone; call connect() again
    to re-handshake.
    """

    def __init__(self, bridge: Bridge):
        self.bridge = bridge
        self._sock: socket.socket | None = None
        self._reader: threading.Thread | None = None
        self._lock = threading.Lock()
        self.connected = False

    def connect(self, timeout: float = 5.0) -> None:
        endpoint = self.bridge.config.endpoint
        if endpoint is None:
            raise ValueError("bridge config has no endpoint")
        self.bridge.reset()
        sock = socket.create_connection(endpoint, timeout=timeout)
        sock.settimeout(None)
        self._sock = sock
        self.connected = True
        self.send_raw(self.bridge.hello_message())
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        decoder = MessageDecoder()
        sock = self._sock
        try:
            while True:
                data = sock.recv(4096)
                if not data:
                    break
                for message in decoder.feed(data):
                    with self._lock:
                        self.bridge.handle_message(message)
        except OSError:
            pass
        self.connected = False

    def send_raw(self, payload: bytes) -> None:
        if not self.connected or self._sock is None:
            return
        try:
            self._sock.sendall(payload)
        except OSError:
            self.connected = False

    def sync_tick(self, sim_pose: Pose, sim_aperture: float) -> FollowExternal | None:
        with self._lock:
            outbound, follow = self.bridge.sync_tick(sim_pose, sim_aperture)
        for payload in outbound:
            self.send_raw(payload)
        return follow

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self.connected = False


def serve_fake_arm(
    host: str,
    port: int,
    arm: FakeExternalArm,
    period: float = DEFAULT_SYNC_PERIOD,
    stop: threading.Event | None = None,
) -> threading.Thread:
    """Serve a fake external arm over the wire protocol; returns the thread."""
    stop = stop or threading.Event()
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind((host, port))
    listener.listen(1)
    listener.settimeout(0.2)

    def session(conn: socket.socket) -> None:
        conn.settimeout(period)
        decoder = MessageDecoder()
        conn.sendall(arm.limits_message())
        while not stop.is_set():
            try:
                data = conn.recv(4096)
                if not data:
                    break
                for message in decoder.feed(data):
                    arm.handle_message(message)
            except socket.timeout:
                pass
            except OSError:
                break
            arm.advance(period)
            try:
                conn.sendall(arm.pose_message())
            except OSError:
                break
        conn.close()

    def accept_loop() -> None:
        while not stop.is_set():
            try:
                conn, _ = listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            session(conn)
        listener.close()

    thread = threading.Thread(target=accept_loop, daemon=True)
    thread.stop_event = stop  # type: ignore[attr-defined]
    thread.start()
    return thread
