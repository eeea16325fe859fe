"""Per-tick CSV recording and replay with scene substitution and frame hooks.

File format (one line per row, shortest round-trip decimal encoding):

    #H,format,<version>
    #H,tick_rate,<hz>
    #O,<id>,<mesh>,<sx>,<sy>,<sz>,<tag;tag;...>
    F,<tick>,<t>,<object id>,<px>,<py>,<pz>,<qw>,<qx>,<qy>,<qz>
    C,<tick>,<aperture>,<subset as i;i with - for empty slots>,<label;label;...>
    E,<tick>,<episode>,<ticks>,<completion_time>,<mode_switches>,<suggestions_accepted>

Header rows come first, then one group of F rows plus one C row per tick,
in tick order. An E row after the C row closes an episode. The end effector
and the user's view are tracked under the reserved ids ``arm`` and ``view``.
Stationary level geometry is not recorded.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .geometry import Frame, Pose, Rotation, Vec3
from .task import EpisodeMetrics

FORMAT_VERSION = 1
ARM_ID = "arm"
VIEW_ID = "view"


class RecordingError(Exception):
    pass


class MissingHeader(RecordingError):
    pass


class ParseError(RecordingError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class VersionMismatch(RecordingError):
    pass


@dataclass(frozen=True, slots=True)
class ObjectSpec:
    object_id: str
    mesh: str
    scale: Vec3 = Vec3(1.0, 1.0, 1.0)
    tags: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class RecordingHeader:
    tick_rate: float
    registry: tuple[ObjectSpec, ...]
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        ids = [spec.object_id for spec in self.registry]
        if len(ids) != len(set(ids)):
            raise RecordingError("registry object ids must be unique")


@dataclass(frozen=True, slots=True)
class FrameRecord:
    tick: int
    timestamp: float
    view: Pose
    arm: Pose
    finger_aperture: float
    active_subset: tuple[int | None, ...]
    suggestion_labels: tuple[str, ...]
    object_poses: tuple[tuple[str, Pose], ...]
    episode_end: EpisodeMetrics | None = None


def _fmt(x: float) -> str:
    return repr(float(x))


def _pose_fields(pose: Pose) -> list[str]:
    p, q = pose.position, pose.orientation
    return [_fmt(p.x), _fmt(p.y), _fmt(p.z), _fmt(q.w), _fmt(q.x), _fmt(q.y), _fmt(q.z)]


def _subset_field(subset: tuple[int | None, ...]) -> str:
    return ";".join("-" if i is None else str(i) for i in subset)


def _parse_subset(text: str) -> tuple[int | None, ...]:
    if not text:
        return ()
    return tuple(None if part == "-" else int(part) for part in text.split(";"))


def header_lines(header: RecordingHeader) -> list[str]:
    lines = [
        f"#H,format,{header.format_version}",
        f"#H,tick_rate,{_fmt(header.tick_rate)}",
    ]
    for spec in header.registry:
        s = spec.scale
        tags = ";".join(spec.tags)
        lines.append(
            f"#O,{spec.object_id},{spec.mesh},{_fmt(s.x)},{_fmt(s.y)},{_fmt(s.z)},{tags}"
        )
    return lines


def frame_lines(frame: FrameRecord) -> list[str]:
    t = _fmt(frame.timestamp)
    rows = [
        ",".join(["F", str(frame.tick), t, ARM_ID] + _pose_fields(frame.arm)),
        ",".join(["F", str(frame.tick), t, VIEW_ID] + _pose_fields(frame.view)),
    ]
    for object_id, pose in frame.object_poses:
        rows.append(",".join(["F", str(frame.tick), t, object_id] + _pose_fields(pose)))
    rows.append(
        ",".join([
            "C",
            str(frame.tick),
            _fmt(frame.finger_aperture),
            _subset_field(frame.active_subset),
            ";".join(frame.suggestion_labels),
        ])
    )
    end = frame.episode_end
    if end is not None:
        rows.append(
            ",".join([
                "E",
                str(frame.tick),
                str(end.episode),
                str(end.ticks),
                _fmt(end.completion_time),
                str(end.mode_switches),
                str(end.suggestions_accepted),
            ])
        )
    return rows


class RecordingWriter:
    """Appends frames to disk through a queue so the tick loop never blocks.

    The header must be written before any frame. close() drains the queue and
    surfaces any I/O error raised by the writer thread.
    """

    def __init__(self, path: str | Path, buffered: bool = True):
        self.path = Path(path)
        self._file = open(self.path, "w", encoding="utf-8", newline="\n")
        self._header_written = False
        self._error: BaseException | None = None
        self._queue: queue.Queue[list[str] | None] | None = None
        self._thread: threading.Thread | None = None
        if buffered:
            self._queue = queue.Queue()
            self._thread = threading.Thread(target=self._drain, daemon=True)
            self._thread.start()

    def _drain(self):
        assert self._queue is not None
        while True:
            lines = self._queue.get()
            if lines is None:
                return
            try:
                for line in lines:
                    self._file.write(line + "\n")
            except BaseException as exc:  # surfaced on the next call
                self._error = exc
                return

    def _emit(self, lines: list[str]):
        if self._error is not None:
            raise self._error
        if self._queue is not None:
            self._queue.put(lines)
        else:
            for line in lines:
                self._file.write(line + "\n")

    def write_header(self, header: RecordingHeader):
        if self._header_written:
            raise RecordingError("header already written")
        self._emit(header_lines(header))
        self._header_written = True

    def record_tick(self, frame: FrameRecord):
        if not self._header_written:
            raise MissingHeader("write_header must be called before frames")
        self._emit(frame_lines(frame))

    def close(self):
        if self._queue is not None and self._thread is not None:
            self._queue.put(None)
            self._thread.join()
            self._queue = None
            self._thread = None
        if not self._file.closed:
            self._file.flush()
            self._file.close()
        if self._error is not None:
            raise self._error

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_recording(path: str | Path, header: RecordingHeader, frames: Iterable[FrameRecord]):
    with RecordingWriter(path, buffered=False) as writer:
        writer.write_header(header)
        for frame in frames:
            writer.record_tick(frame)


def _parse_pose(parts: list[str], line_number: int) -> Pose:
    try:
        px, py, pz, qw, qx, qy, qz = (float(v) for v in parts)
    except ValueError as exc:
        raise ParseError(line_number, f"bad pose fields: {exc}") from None
    # Written quaternions are already canonical units; renormalizing here
    # would shift the last ulp and break byte-exact round trips.
    return Pose(Vec3(px, py, pz), Rotation(qw, qx, qy, qz), Frame.WORLD)


@dataclass(slots=True)
class _FrameBuilder:
    tick: int
    timestamp: float
    arm: Pose | None = None
    view: Pose | None = None
    objects: list[tuple[str, Pose]] = field(default_factory=list)
    control: tuple[float, tuple[int | None, ...], tuple[str, ...]] | None = None
    episode_end: EpisodeMetrics | None = None

    def build(self, line_number: int) -> FrameRecord:
        if self.arm is None or self.view is None or self.control is None:
            raise ParseError(line_number, f"incomplete frame group for tick {self.tick}")
        aperture, subset, labels = self.control
        return FrameRecord(
            tick=self.tick,
            timestamp=self.timestamp,
            view=self.view,
            arm=self.arm,
            finger_aperture=aperture,
            active_subset=subset,
            suggestion_labels=labels,
            object_poses=tuple(self.objects),
            episode_end=self.episode_end,
        )


def parse_recording(lines: Iterable[str]) -> tuple[RecordingHeader, list[FrameRecord]]:
    """Strict parse of a whole recording; raises ParseError with a line number."""
    tick_rate: float | None = None
    version: int | None = None
    registry: list[ObjectSpec] = []
    frames: list[FrameRecord] = []
    builder: _FrameBuilder | None = None
    last_line = 0

    for line_number, raw in enumerate(lines, start=1):
        last_line = line_number
        line = raw.rstrip("\n")
        if not line:
            continue
        parts = line.split(",")
        kind = parts[0]

        if kind == "#H":
            if len(parts) != 3:
                raise ParseError(line_number, "header row needs key and value")
            key, value = parts[1], parts[2]
            if key == "format":
                version = int(value)
                if version != FORMAT_VERSION:
                    raise VersionMismatch(
                        f"recording format {version}, supported {FORMAT_VERSION}"
                    )
            elif key == "tick_rate":
                tick_rate = float(value)
            else:
                raise ParseError(line_number, f"unknown header key {key!r}")
        elif kind == "#O":
            if len(parts) != 7:
                raise ParseError(line_number, "registry row needs 7 fields")
            registry.append(
                ObjectSpec(
                    object_id=parts[1],
                    mesh=parts[2],
                    scale=Vec3(float(parts[3]), float(parts[4]), float(parts[5])),
                    tags=tuple(tag for tag in parts[6].split(";") if tag),
                )
            )
        elif kind == "F":
            if len(parts) != 11:
                raise ParseError(line_number, "frame row needs 11 fields")
            tick = int(parts[1])
            timestamp = float(parts[2])
            object_id = parts[3]
            if builder is not None and builder.tick != tick:
                frames.append(builder.build(line_number))
                builder = None
            if builder is None:
                builder = _FrameBuilder(tick=tick, timestamp=timestamp)
            pose = _parse_pose(parts[4:], line_number)
            if object_id == ARM_ID:
                builder.arm = pose
            elif object_id == VIEW_ID:
                builder.view = pose
            else:
                builder.objects.append((object_id, pose))
        elif kind == "C":
            if len(parts) != 5:
                raise ParseError(line_number, "control row needs 5 fields")
            if builder is None or builder.tick != int(parts[1]):
                raise ParseError(line_number, "control row without its frame group")
            labels = tuple(label for label in parts[4].split(";") if label)
            builder.control = (float(parts[2]), _parse_subset(parts[3]), labels)
        elif kind == "E":
            if len(parts) != 7:
                raise ParseError(line_number, "episode row needs 7 fields")
            if builder is None or builder.tick != int(parts[1]):
                raise ParseError(line_number, "episode row without its frame group")
            builder.episode_end = EpisodeMetrics(
                episode=int(parts[2]),
                ticks=int(parts[3]),
                completion_time=float(parts[4]),
                mode_switches=int(parts[5]),
                suggestions_accepted=int(parts[6]),
            )
        else:
            raise ParseError(line_number, f"unknown row kind {kind!r}")

    if builder is not None:
        frames.append(builder.build(last_line))
    if version is None or tick_rate is None:
        raise ParseError(last_line or 1, "missing #H,format or #H,tick_rate header")

    previous = None
    for frame in frames:
        if previous is not None and frame.tick != previous + 1:
            raise ParseError(last_line, f"tick {frame.tick} does not follow {previous}")
        previous = frame.tick

    return RecordingHeader(tick_rate=tick_rate, registry=tuple(registry)), frames


def load_recording(path: str | Path) -> tuple[RecordingHeader, list[FrameRecord]]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_recording(f)


@dataclass(frozen=True, slots=True)
class ReplayFrame:
    record: FrameRecord
    objects: dict[str, Pose]


def replay(
    header: RecordingHeader,
    frames: Iterable[FrameRecord],
    scene_override: dict[str, Pose] | None = None,
    frame_hook: Callable[[ReplayFrame], None] | None = None,
) -> Iterator[ReplayFrame]:
    """Stream frames in order, optionally substituting a different scene.

    With an override scene, recorded objects drive the override objects that
    share their id; override objects with no recorded counterpart keep their
    static pose. The hook runs after each frame is assembled.
    """
    recorded_ids = {spec.object_id for spec in header.registry}
    for record in frames:
        poses = dict(record.object_poses)
        poses[ARM_ID] = record.arm
        poses[VIEW_ID] = record.view
        if scene_override is None:
            objects = poses
        else:
            objects = {}
            for object_id, static_pose in scene_override.items():
                if object_id in recorded_ids and object_id in poses:
                    objects[object_id] = poses[object_id]
                else:
                    objects[object_id] = static_pose
        out = ReplayFrame(record=record, objects=objects)
        if frame_hook is not None:
            frame_hook(out)
        yield out


def metrics_rows(frames: Iterable[FrameRecord]) -> list[EpisodeMetrics]:
    """Per-episode metrics as recorded in the episode summary rows."""
    return [f.episode_end for f in frames if f.episode_end is not None]
