"""Composition root: fixed-rate tick loop wiring control, sim, task, and I/O."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

from .arm import ArmState, VelocityLimits, Workspace, follow_me, grasp_check, step, sync_held_object
from .attention import AttentionConfig, AttentionMode, AttentionState, Notification, update as attention_update
from .bridge import Bridge, BridgeConfig, BridgeLink, BridgeRole, FollowExternal
from .dofmap import AdaptiveAxis, ControlState, classic_control_config, identity_matrix, mode_switch, select_subset, apply_input
from .geometry import Pose, Rotation, Vec3, Vec7, ZERO7, rotation_from_forward
from .attention import adaptive_axes_nearly_equal
from .protocol import InputEvent, InputKind
from .recording import ARM_ID, FrameRecord, ObjectSpec, RecordingHeader, RecordingWriter, VIEW_ID
from .suggestions import EngineParams, RuleEngine, SceneSnapshot, SuggestionLabel, SuggestionSet, evaluate
from .task import BLOCK_ID, TaskLayout, TaskState, check_success, current_target, new_task


class ControlScheme(Enum):
    CLASSIC = "classic"
    ADMC_CONTINUOUS = "admc_continuous"
    ADMC_THRESHOLD = "admc_threshold"
    FOLLOW_ME = "follow_me"


DEFAULT_HOME_POSITION = Vec3(-0.25, 0.0, 0.30)


@dataclass(frozen=True, slots=True)
class SessionConfig:
    tick_rate: float = 50.0
    scheme: ControlScheme = ControlScheme.ADMC_CONTINUOUS
    input_dof: int = 2
    seed: int = 42
    limits: VelocityLimits = VelocityLimits()
    layout: TaskLayout = TaskLayout()
    workspace: Workspace = Workspace()
    home_position: Vec3 = DEFAULT_HOME_POSITION
    engine: EngineParams | None = None
    attention: AttentionConfig | None = None
    recording_path: str | None = None
    bridge: BridgeConfig | None = None

    def __post_init__(self):
        if self.tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        if not 1 <= self.input_dof <= 7:
            raise ValueError("input_dof must be in [1, 7]")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    def resolved_engine(self) -> EngineParams:
        """Engine per-tick magnitudes follow the arm limits unless overridden."""
        if self.engine is not None:
            return self.engine
        return EngineParams(
            vel_trans=self.limits.vel_trans * self.dt,
            vel_rot=self.limits.vel_rot * self.dt,
        )

    def resolved_attention(self) -> AttentionConfig:
        if self.attention is not None:
            return self.attention
        mode = (
            AttentionMode.THRESHOLD
            if self.scheme is ControlScheme.ADMC_THRESHOLD
            else AttentionMode.CONTINUOUS
        )
        return AttentionConfig(mode=mode)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "tick_rate": self.tick_rate,
            "scheme": self.scheme.value,
            "input_dof": self.input_dof,
            "seed": self.seed,
            "limits": {
                "vel_trans": self.limits.vel_trans,
                "vel_rot": self.limits.vel_rot,
                "vel_fingers": self.limits.vel_fingers,
            },
            "home_position": list(self.home_position.as_tuple()),
        }
        if self.recording_path is not None:
            data["recording_path"] = self.recording_path
        engine = self.engine
        if engine is not None:
            data["engine"] = {
                "minimal_hover_distance": engine.minimal_hover_distance,
                "hover_height": engine.hover_height,
                "vel_trans": engine.vel_trans,
                "vel_rot": engine.vel_rot,
                "reach_radius": engine.reach_radius,
                "rotation_scale": engine.rotation_scale,
            }
        attention = self.attention
        if attention is not None:
            data["attention"] = {
                "mode": attention.mode.value,
                "realtime_threshold": attention.realtime_threshold,
                "channels": sorted(c.value for c in attention.channels),
            }
        if self.bridge is not None:
            data["bridge"] = {
                "role": self.bridge.role.value,
                "endpoint": list(self.bridge.endpoint) if self.bridge.endpoint else None,
                "sync_period": self.bridge.sync_period,
            }
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SessionConfig":
        from .attention import Channel

        kwargs: dict[str, Any] = {}
        if "tick_rate" in data:
            kwargs["tick_rate"] = float(data["tick_rate"])
        if "scheme" in data:
            kwargs["scheme"] = ControlScheme(data["scheme"])
        if "input_dof" in data:
            kwargs["input_dof"] = int(data["input_dof"])
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        if "limits" in data:
            kwargs["limits"] = VelocityLimits(**data["limits"])
        if "home_position" in data:
            kwargs["home_position"] = Vec3(*data["home_position"])
        if "engine" in data:
            kwargs["engine"] = EngineParams(**data["engine"])
        if "attention" in data:
            raw = dict(data["attention"])
            raw["mode"] = AttentionMode(raw.get("mode", "threshold"))
            raw["channels"] = frozenset(Channel(c) for c in raw.get("channels", []))
            kwargs["attention"] = AttentionConfig(**raw)
        if "recording_path" in data:
            kwargs["recording_path"] = data["recording_path"]
        if "bridge" in data:
            raw = dict(data["bridge"])
            endpoint = raw.get("endpoint")
            kwargs["bridge"] = BridgeConfig(
                role=BridgeRole(raw["role"]),
                endpoint=tuple(endpoint) if endpoint else None,
                sync_period=float(raw.get("sync_period", 0.1)),
            )
        return cls(**kwargs)


def _arrow_json(anchor: Vec3, orientation: Rotation, axis: AdaptiveAxis) -> dict[str, Any] | None:
    """World-space arrow data for one adaptive axis; None when the axis is idle."""
    translation = orientation.apply(axis.translation)
    rotation_vec = orientation.apply(axis.rotation.rotation_vector())
    has_translation = translation.norm() > 1e-12
    has_rotation = rotation_vec.norm() > 1e-12
    has_gripper = abs(axis.gripper) > 1e-12
    if not (has_translation or has_rotation or has_gripper):
        return None
    out: dict[str, Any] = {"anchor": list(anchor.as_tuple()), "gripper": axis.gripper}
    out["dir"] = list(translation.normalized().as_tuple()) if has_translation else None
    out["magnitude"] = translation.norm()
    if has_rotation:
        out["rot_axis"] = list(rotation_vec.normalized().as_tuple())
        out["rot_angle"] = rotation_vec.norm()
    else:
        out["rot_axis"] = None
        out["rot_angle"] = 0.0
    return out


@dataclass(slots=True)
class StateUpdate:
    tick: int
    time: float
    scheme: ControlScheme
    arm_pose: Pose
    finger_aperture: float
    held: str | None
    objects: dict[str, Pose]
    phase: str
    episode: int
    active_vec7: Vec7
    active_arrow: dict | None
    suggested_label: str | None
    suggested_vec7: Vec7 | None
    suggested_arrow: dict | None
    suggested_visible: bool
    suggestion_labels: tuple[str, ...]
    cursor: int
    notification: Notification | None
    metrics: dict[str, Any]
    layout: TaskLayout

    def to_json(self) -> dict[str, Any]:
        from .protocol import pose_to_json

        notification = None
        if self.notification is not None:
            notification = {
                "difference": self.notification.difference,
                "channels": sorted(c.value for c in self.notification.channels),
                "tone_hz": self.notification.tone_hz,
                "tone_seconds": self.notification.tone_seconds,
            }
        return {
            "kind": "state",
            "tick": self.tick,
            "time": self.time,
            "scheme": self.scheme.value,
            "arm": {
                "pose": pose_to_json(self.arm_pose),
                "aperture": self.finger_aperture,
                "held": self.held,
            },
            "objects": {k: pose_to_json(v) for k, v in self.objects.items()},
            "task": {
                "phase": self.phase,
                "episode": self.episode,
                "drop_center": list(self.layout.drop_center.as_tuple()),
                "drop_half": [self.layout.drop_half.x, self.layout.drop_half.y],
                "table_half": [self.layout.table_half.x, self.layout.table_half.y],
            },
            "active": {"vec7": list(self.active_vec7), "arrow": self.active_arrow},
            "suggested": None
            if self.suggested_vec7 is None
            else {
                "label": self.suggested_label,
                "vec7": list(self.suggested_vec7),
                "arrow": self.suggested_arrow,
                "visible": self.suggested_visible,
            },
            "suggestions": list(self.suggestion_labels),
            "cursor": self.cursor,
            "notification": notification,
            "metrics": self.metrics,
        }


class Session:
    """One authoritative simulation session driven by a fixed-rate tick loop."""

    def __init__(self, cfg: SessionConfig, rule_engine: RuleEngine = evaluate,
                 bridge_link: "BridgeLink | None" = None):
        self.cfg = cfg
        self.dt = cfg.dt
        self.engine_params = cfg.resolved_engine()
        self.attention_cfg = cfg.resolved_attention()
        self.rule_engine = rule_engine

        limits = cfg.limits
        self.bridge_link = bridge_link
        if bridge_link is None and cfg.bridge is not None and cfg.bridge.endpoint:
            self.bridge_link = BridgeLink(Bridge(cfg.bridge))
            self.bridge_link.connect()
        if self.bridge_link is not None:
            bridge = self.bridge_link.bridge
            if bridge.config.role is BridgeRole.PHYSICAL_TWIN:
                # Reality has to keep up, so its limits become the sim's.
                limits = bridge.external_limits
        self._sync_ticks = 1
        if self.bridge_link is not None:
            self._sync_ticks = max(1, round(self.bridge_link.bridge.config.sync_period * cfg.tick_rate))

        home = Pose(cfg.workspace.clamp(cfg.home_position))
        self.arm = ArmState(home, finger_aperture=1.0, held=None, limits=limits)
        self.task, block = new_task(cfg.layout, cfg.seed)
        self.objects = {BLOCK_ID: block}
        self.view_pose = Pose(
            Vec3(-0.9, 0.0, 0.8),
            rotation_from_forward(Vec3(0.9, 0.0, -0.8).normalized()),
        )

        self.tick_index = 0
        self.notification: Notification | None = None
        self.attention_state = AttentionState()

        self.ring = classic_control_config()
        self.ring_index = 0
        self.control = select_subset(identity_matrix(), self.ring[0])

        self.cursor = 0
        self.suggestions: SuggestionSet = self.rule_engine(self.snapshot())
        self.active_axis = AdaptiveAxis.zero()
        self.active_vec7: Vec7 = ZERO7
        if cfg.scheme in (ControlScheme.ADMC_CONTINUOUS, ControlScheme.ADMC_THRESHOLD):
            # The session opens with the optimal mapping bound to the input,
            # mirroring subset selection at creation: not a mode switch.
            self._install(self.suggestions.by_label(SuggestionLabel.OPTIMAL), count=False)

        self._follow_target: Pose | None = None
        self._axis_input: tuple[float, ...] = ()

        self.recorder: RecordingWriter | None = None
        if cfg.recording_path is not None:
            self.recorder = RecordingWriter(cfg.recording_path)
            self.recorder.write_header(self._header())

    def _header(self) -> RecordingHeader:
        block = self.objects[BLOCK_ID]
        scale = block.half_extents.scaled(2.0)
        return RecordingHeader(
            tick_rate=self.cfg.tick_rate,
            registry=(
                ObjectSpec(ARM_ID, "gripper"),
                ObjectSpec(VIEW_ID, "camera"),
                ObjectSpec(BLOCK_ID, "cube", scale, tuple(sorted(block.tags))),
            ),
        )

    def snapshot(self) -> SceneSnapshot:
        held = self.arm.held.object_id if self.arm.held else None
        target_pose, target_kind = current_target(
            self.task, self.objects[BLOCK_ID], held is not None
        )
        return SceneSnapshot(
            gripper_pose=self.arm.end_effector,
            finger_aperture=self.arm.finger_aperture,
            held_object=held,
            current_target_pose=target_pose,
            current_target_kind=target_kind,
            params=self.engine_params,
        )

    # Control ------------------------------------------------------------

    def _install(self, suggestion, count: bool = True) -> None:
        """Make a suggestion the active axis; a material change is a mode switch."""
        vec = suggestion.axis.to_vec7(self.engine_params.vel_trans, self.engine_params.vel_rot)
        if count and not adaptive_axes_nearly_equal(
            self.active_vec7, vec, self.attention_cfg.realtime_threshold
        ):
            self.task.episode_mode_switches += 1
            self.task.episode_suggestions_accepted += 1
        self.active_axis = suggestion.axis
        self.active_vec7 = vec
        self.cursor = 0

    def _handle_event(self, event: InputEvent) -> None:
        scheme = self.cfg.scheme
        if event.kind is InputKind.AXIS:
            self._axis_input = event.values
        elif event.kind is InputKind.FOLLOW_ME:
            self._follow_target = event.pose
        elif event.kind is InputKind.MODE_SWITCH and scheme is ControlScheme.CLASSIC:
            self.ring_index = (self.ring_index + 1) % len(self.ring)
            before = self.control.mode_switch_count
            self.control = mode_switch(self.control, self.ring[self.ring_index])
            self.task.episode_mode_switches += self.control.mode_switch_count - before
        elif event.kind is InputKind.CYCLE_SUGGESTION and scheme in (
            ControlScheme.ADMC_CONTINUOUS, ControlScheme.ADMC_THRESHOLD
        ):
            self.cursor = (self.cursor + 1) % len(self.suggestions.ranked)
        elif event.kind is InputKind.ACCEPT_SUGGESTION and scheme in (
            ControlScheme.ADMC_CONTINUOUS, ControlScheme.ADMC_THRESHOLD
        ):
            self._install(self.suggestions.ranked[self.cursor])

    def _command(self) -> Vec7:
        scheme = self.cfg.scheme
        u = self._axis_input
        if scheme is ControlScheme.CLASSIC:
            values = list(u[: len(self.control.active_subset)])
            values += [0.0] * (len(self.control.active_subset) - len(values))
            return apply_input(self.control, values)
        if scheme in (ControlScheme.ADMC_CONTINUOUS, ControlScheme.ADMC_THRESHOLD):
            intensity = u[0] if u else 0.0
            return self.active_vec7.scaled(intensity).clamped(1.0)
        return ZERO7

    # Tick ---------------------------------------------------------------

    def tick(self, events: Sequence[InputEvent] = ()) -> StateUpdate:
        for event in events:
            self._handle_event(event)

        cmd = self._command()
        previous_aperture = self.arm.finger_aperture
        self.arm = step(self.arm, cmd, self.dt, self.cfg.workspace)
        if self.cfg.scheme is ControlScheme.FOLLOW_ME and self._follow_target is not None:
            self.arm = follow_me(self.arm, self._follow_target, self.cfg.workspace)

        follow = None
        if self.bridge_link is not None and self.tick_index % self._sync_ticks == 0:
            follow = self.bridge_link.sync_tick(self.arm.end_effector, self.arm.finger_aperture)
        if isinstance(follow, FollowExternal):
            self.arm = follow_me(self.arm, follow.pose, self.cfg.workspace)
            self.arm = replace(self.arm, finger_aperture=follow.aperture)

        self.objects = sync_held_object(self.arm, self.objects)
        self.arm, self.objects = grasp_check(
            self.arm, previous_aperture, self.objects, commanded_gripper=cmd.gripper
        )

        completed, block, episode_row = check_success(
            self.task, self.arm, self.objects[BLOCK_ID], self.tick_index, self.cfg.tick_rate
        )
        self.objects[BLOCK_ID] = block

        self.suggestions = self.rule_engine(self.snapshot())
        if self.cursor >= len(self.suggestions.ranked):
            self.cursor = 0

        suggested = self.suggestions.ranked[self.cursor]
        suggested_vec = suggested.axis.to_vec7(
            self.engine_params.vel_trans, self.engine_params.vel_rot
        )
        self.attention_state, self.notification = attention_update(
            self.attention_state, self.active_vec7, suggested_vec, self.attention_cfg
        )

        update = self._state_update(suggested, suggested_vec, episode_row)
        if self.recorder is not None:
            self.recorder.record_tick(self._frame(episode_row))

        self.tick_index += 1
        return update

    def _active_subset_for_record(self) -> tuple[int | None, ...]:
        if self.cfg.scheme is ControlScheme.CLASSIC:
            return self.control.active_subset
        return (self.cursor,)

    def _frame(self, episode_row) -> FrameRecord:
        return FrameRecord(
            tick=self.tick_index,
            timestamp=self.tick_index / self.cfg.tick_rate,
            view=self.view_pose,
            arm=self.arm.end_effector,
            finger_aperture=self.arm.finger_aperture,
            active_subset=self._active_subset_for_record(),
            suggestion_labels=self.suggestions.labels(),
            object_poses=((BLOCK_ID, self.objects[BLOCK_ID].pose),),
            episode_end=episode_row,
        )

    def _state_update(self, suggested, suggested_vec: Vec7, episode_row) -> StateUpdate:
        anchor = self.arm.end_effector.position
        orientation = self.arm.end_effector.orientation
        is_admc = self.cfg.scheme in (ControlScheme.ADMC_CONTINUOUS, ControlScheme.ADMC_THRESHOLD)
        visible = is_admc and (
            self.attention_cfg.mode is AttentionMode.CONTINUOUS or not self.attention_state.armed
        )
        totals = self.task.totals
        metrics = {
            "episodes_completed": totals.episodes_completed,
            "mode_switches_total": totals.mode_switches,
            "suggestions_accepted_total": totals.suggestions_accepted,
            "episode_mode_switches": self.task.episode_mode_switches,
            "episode_suggestions_accepted": self.task.episode_suggestions_accepted,
            "episode_completed_now": episode_row is not None,
        }
        return StateUpdate(
            tick=self.tick_index,
            time=self.tick_index / self.cfg.tick_rate,
            scheme=self.cfg.scheme,
            arm_pose=self.arm.end_effector,
            finger_aperture=self.arm.finger_aperture,
            held=self.arm.held.object_id if self.arm.held else None,
            objects={k: v.pose for k, v in self.objects.items()},
            phase=self.task.phase.value,
            episode=self.task.episode,
            active_vec7=self.active_vec7,
            active_arrow=_arrow_json(anchor, orientation, self.active_axis) if is_admc else None,
            suggested_label=suggested.label.value if is_admc else None,
            suggested_vec7=suggested_vec if is_admc else None,
            suggested_arrow=_arrow_json(anchor, orientation, suggested.axis) if is_admc else None,
            suggested_visible=visible,
            suggestion_labels=self.suggestions.labels(),
            cursor=self.cursor,
            notification=self.notification,
            metrics=metrics,
            layout=self.cfg.layout,
        )

    def close(self) -> None:
        if self.recorder is not None:
            self.recorder.close()
            self.recorder = None
        if self.bridge_link is not None:
            self.bridge_link.close()
