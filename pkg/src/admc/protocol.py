"""Session wire protocol: newline-delimited JSON shared by UI clients and agents."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .geometry import Frame, Pose, Rotation, Vec3


class ProtocolError(ValueError):
    pass


class InputKind(Enum):
    AXIS = "axis"
    MODE_SWITCH = "mode_switch"
    CYCLE_SUGGESTION = "cycle"
    ACCEPT_SUGGESTION = "accept"
    FOLLOW_ME = "follow_me"


@dataclass(frozen=True, slots=True)
class InputEvent:
    kind: InputKind
    values: tuple[float, ...] = ()
    pose: Pose | None = None
    client_id: str = ""
    client_tick: int = 0


def pose_to_json(pose: Pose) -> dict:
    p, q = pose.position, pose.orientation
    return {"p": [p.x, p.y, p.z], "q": [q.w, q.x, q.y, q.z]}


def pose_from_json(data: dict) -> Pose:
    px, py, pz = (float(v) for v in data["p"])
    qw, qx, qy, qz = (float(v) for v in data["q"])
    return Pose(Vec3(px, py, pz), Rotation.from_components(qw, qx, qy, qz), Frame.WORLD)


def encode_input(event: InputEvent) -> str:
    body: dict[str, Any] = {
        "kind": event.kind.value,
        "client": event.client_id,
        "tick": event.client_tick,
    }
    if event.kind is InputKind.AXIS:
        body["values"] = list(event.values)
    if event.kind is InputKind.FOLLOW_ME:
        if event.pose is None:
            raise ProtocolError("follow_me event needs a pose")
        body["pose"] = pose_to_json(event.pose)
    return json.dumps(body, separators=(",", ":"))


def decode_input(line: str) -> InputEvent:
    """Parse one client message; malformed messages raise ProtocolError."""
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad json: {exc}") from None
    if not isinstance(data, dict):
        raise ProtocolError("message must be an object")
    try:
        kind = InputKind(data.get("kind"))
    except ValueError:
        raise ProtocolError(f"unknown input kind {data.get('kind')!r}") from None

    values: tuple[float, ...] = ()
    pose = None
    if kind is InputKind.AXIS:
        raw = data.get("values")
        if not isinstance(raw, list) or not raw:
            raise ProtocolError("axis event needs a values list")
        values = tuple(float(v) for v in raw)
        if any(not -1.0 <= v <= 1.0 for v in values):
            raise ProtocolError("axis values must be in [-1, 1]")
    if kind is InputKind.FOLLOW_ME:
        raw = data.get("pose")
        if not isinstance(raw, dict):
            raise ProtocolError("follow_me event needs a pose")
        try:
            pose = pose_from_json(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad pose: {exc}") from None

    return InputEvent(
        kind=kind,
        values=values,
        pose=pose,
        client_id=str(data.get("client", "")),
        client_tick=int(data.get("tick", 0)),
    )


def encode_state(state: dict) -> str:
    """StateUpdate dict (already JSON-shaped) to one wire line."""
    return json.dumps(state, separators=(",", ":"))


def error_message(reason: str) -> str:
    return json.dumps({"kind": "error", "reason": reason}, separators=(",", ":"))
