import hashlib
import math
from pathlib import Path

import pytest

from admc.attention import AttentionConfig, AttentionMode
from admc.geometry import Pose, Vec3, Vec7
from admc.protocol import InputEvent, InputKind, ProtocolError, decode_input, encode_input
from admc.session import ControlScheme, Session, SessionConfig
from admc.suggestions import SuggestionLabel
from admc.task import BLOCK_ID


def axis(*values):
    return InputEvent(InputKind.AXIS, values=tuple(values))


class TestProtocol:
    def test_input_round_trip(self):
        events = [
            axis(0.5, -1.0),
            InputEvent(InputKind.MODE_SWITCH),
            InputEvent(InputKind.CYCLE_SUGGESTION),
            InputEvent(InputKind.ACCEPT_SUGGESTION),
            InputEvent(InputKind.FOLLOW_ME, pose=Pose(Vec3(0.1, 0.2, 0.3))),
        ]
        for event in events:
            decoded = decode_input(encode_input(event))
            assert decoded.kind == event.kind
            assert decoded.values == event.values
            if event.pose is not None:
                assert (decoded.pose.position - event.pose.position).norm() < 1e-12

    def test_malformed_messages_rejected(self):
        for bad in ["not json", '{"kind":"bogus"}', '{"kind":"axis"}',
                    '{"kind":"axis","values":[2.0]}', '{"kind":"follow_me"}']:
            with pytest.raises(ProtocolError):
                decode_input(bad)


class TestTickLoop:
    def test_fixed_rate_produces_one_frame_per_tick(self, tmp_path):
        path = tmp_path / "s.csv"
        cfg = SessionConfig(recording_path=str(path), seed=7)
        session = Session(cfg)
        for _ in range(500):
            session.tick([axis(0.3)])
        session.close()
        from admc.recording import load_recording

        _, frames = load_recording(path)
        assert len(frames) == 500
        assert [f.tick for f in frames] == list(range(500))

    def test_no_input_keeps_arm_static_but_evaluates(self):
        session = Session(SessionConfig(seed=7))
        before = session.arm.end_effector
        update = session.tick([])
        assert session.arm.end_effector == before
        assert len(update.suggestion_labels) == 5

    def test_acceptance_installs_suggestion_and_counts_once(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.ADMC_CONTINUOUS))
        # Drive away from the installed optimal so the next accept is material.
        for _ in range(40):
            session.tick([axis(1.0)])
        switches_before = session.task.episode_mode_switches
        optimal_rank = next(
            i for i, s in enumerate(session.suggestions.ranked)
            if s.label is SuggestionLabel.OPTIMAL
        )
        events = [InputEvent(InputKind.CYCLE_SUGGESTION)] * optimal_rank
        # Cycle to the gripper suggestion instead: materially different axis.
        gripper_rank = next(
            i for i, s in enumerate(session.suggestions.ranked)
            if s.label is SuggestionLabel.GRIPPER
        )
        events = [InputEvent(InputKind.CYCLE_SUGGESTION)] * gripper_rank
        events.append(InputEvent(InputKind.ACCEPT_SUGGESTION))
        expected = session.suggestions.ranked[gripper_rank].axis.to_vec7(
            session.engine_params.vel_trans, session.engine_params.vel_rot
        )
        session.tick(events)
        assert session.active_vec7 == expected
        assert session.task.episode_mode_switches == switches_before + 1
        assert session.task.episode_suggestions_accepted >= 1

    def test_accepting_nearly_equal_axis_does_not_count(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.ADMC_CONTINUOUS))
        session.tick([axis(1.0)])
        before = session.task.episode_mode_switches
        # Re-accepting the freshly evaluated optimal right away barely moves it.
        session.tick([InputEvent(InputKind.ACCEPT_SUGGESTION)])
        assert session.task.episode_mode_switches == before

    def test_acceptance_never_teleports_the_arm(self):
        cfg = SessionConfig(seed=11, scheme=ControlScheme.ADMC_CONTINUOUS)
        session = Session(cfg)
        max_step = cfg.limits.vel_trans * cfg.dt + 1e-12
        previous = session.arm.end_effector.position
        for t in range(300):
            events = [InputEvent(InputKind.ACCEPT_SUGGESTION), axis(1.0)]
            session.tick(events)
            now = session.arm.end_effector.position
            assert (now - previous).norm() <= max_step
            previous = now

    def test_classic_mode_switch_cycles_ring(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.CLASSIC))
        assert session.control.active_subset == (0, 1)
        session.tick([InputEvent(InputKind.MODE_SWITCH)])
        assert session.control.active_subset == (2, 3)
        assert session.task.episode_mode_switches == 1
        for _ in range(3):
            session.tick([InputEvent(InputKind.MODE_SWITCH)])
        assert session.control.active_subset == (0, 1)
        assert session.task.episode_mode_switches == 4

    def test_classic_axis_drives_cardinal_motion(self):
        cfg = SessionConfig(seed=7, scheme=ControlScheme.CLASSIC)
        session = Session(cfg)
        start = session.arm.end_effector.position
        session.tick([axis(1.0, 0.0)])
        moved = session.arm.end_effector.position - start
        assert moved.x == pytest.approx(cfg.limits.vel_trans * cfg.dt)
        assert moved.y == 0.0 and moved.z == 0.0

    def test_follow_me_scheme_tracks_pose(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.FOLLOW_ME))
        target = Pose(Vec3(0.2, 0.1, 0.4))
        session.tick([InputEvent(InputKind.FOLLOW_ME, pose=target)])
        assert (session.arm.end_effector.position - target.position).norm() < 1e-12


class TestThresholdScheme:
    def test_threshold_user_accepts_on_notification_and_completes(self):
        cfg = SessionConfig(seed=13, scheme=ControlScheme.ADMC_THRESHOLD)
        session = Session(cfg)
        notifications = 0
        accept_next = False
        for _ in range(6000):
            events = [axis(1.0)]
            if accept_next:
                events.insert(0, InputEvent(InputKind.ACCEPT_SUGGESTION))
                accept_next = False
            update = session.tick(events)
            if update.notification is not None:
                notifications += 1
                accept_next = True
            if session.task.totals.episodes_completed >= 1:
                break
        assert session.task.totals.episodes_completed >= 1
        assert notifications >= 1
        # Each notification is single-fire: acceptance re-aligns the axes, so
        # counts stay small rather than one per tick.
        assert notifications < 60

    def test_continuous_scheme_never_notifies(self):
        cfg = SessionConfig(seed=13, scheme=ControlScheme.ADMC_CONTINUOUS)
        session = Session(cfg)
        for _ in range(600):
            update = session.tick([axis(1.0)])
            assert update.notification is None


class TestDeterminism:
    def run_once(self, tmp_path, name):
        path = tmp_path / name
        cfg = SessionConfig(seed=99, recording_path=str(path),
                            scheme=ControlScheme.ADMC_CONTINUOUS)
        session = Session(cfg)
        trace = []
        for t in range(400):
            events = [InputEvent(InputKind.ACCEPT_SUGGESTION), axis(1.0)]
            if t % 37 == 0:
                events.append(InputEvent(InputKind.CYCLE_SUGGESTION))
            trace.append(events)
            session.tick(events)
        session.close()
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def test_identical_runs_identical_files(self, tmp_path):
        assert self.run_once(tmp_path, "a.csv") == self.run_once(tmp_path, "b.csv")


class TestStateUpdate:
    def test_json_shape_and_arrows(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.ADMC_CONTINUOUS))
        update = session.tick([axis(1.0)])
        data = update.to_json()
        assert data["kind"] == "state"
        assert set(data["objects"]) == {BLOCK_ID}
        assert data["active"]["arrow"] is not None
        assert data["suggested"]["label"] in {l.value for l in SuggestionLabel}
        assert len(data["suggestions"]) == 5
        arrow = data["active"]["arrow"]
        assert len(arrow["anchor"]) == 3

    def test_zero_axis_has_no_arrow(self):
        session = Session(SessionConfig(seed=7, scheme=ControlScheme.ADMC_CONTINUOUS))
        update = session.tick([axis(0.0)])
        # Active arrow reflects the installed axis, which is nonzero here,
        # but a zero input still renders: check the suggested side instead on
        # a fresh classic session where no ADMC arrows exist.
        classic = Session(SessionConfig(seed=7, scheme=ControlScheme.CLASSIC))
        data = classic.tick([]).to_json()
        assert data["active"]["arrow"] is None
        assert data["suggested"] is None
