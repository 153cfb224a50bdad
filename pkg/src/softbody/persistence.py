"""Frame recording and state-dump serialization (XML and CSV).

Reals are written as the shortest decimal that round-trips to the same
float64 (``repr``, with a trailing ``.0`` trimmed), so an XML dump reloads
bit-identically and replay is exact.
"""

from __future__ import annotations

import enum
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterator, Optional, Union

import numpy as np

from .errors import CapacityExceeded, NotRecording, ParseError

Sink = Union[str, Path, IO]


class DumpFormat(enum.Enum):
    XML = "xml"
    CSV = "csv"


def fmt_real(value: float) -> str:
    """Shortest round-trip decimal; integral floats lose the '.0'."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def utc_stamp_basic(now: Optional[datetime] = None) -> str:
    now = now or datetime.now(timezone.utc)
    return now.strftime("%Y%m%dT%H%M%SZ")


def utc_stamp(now: Optional[datetime] = None) -> str:
    now = now or datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(eq=False)
class ObjectFrame:
    """Per-object particle state captured in one frame."""

    object_id: int
    positions: np.ndarray
    velocities: np.ndarray
    forces: np.ndarray
    masses: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, ObjectFrame):
            return NotImplemented
        return (
            self.object_id == other.object_id
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.forces, other.forces)
            and np.array_equal(self.masses, other.masses)
        )


@dataclass(eq=False)
class FrameRecord:
    index: int
    t: float
    objects: list
    markers: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, FrameRecord):
            return NotImplemented
        return (
            self.index == other.index
            and self.t == other.t
            and self.objects == other.objects
            and self.markers == other.markers
        )


@dataclass(frozen=True)
class RecordingMeta:
    created: str
    dt: float
    integrator: str
    scene_digest: str


@dataclass(eq=False)
class Recording:
    meta: RecordingMeta
    frames: list

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return self.meta == other.meta and self.frames == other.frames

    def __len__(self):
        return len(self.frames)


def validate_recording(recording: Recording) -> list:
    """Invariant violations as human-readable strings (empty when valid)."""
    problems = []
    if not recording.meta.dt > 0:
        problems.append(f"meta.dt must be positive, got {recording.meta.dt!r}")
    previous_t = None
    for position, frame in enumerate(recording.frames):
        if frame.index != position:
            problems.append(f"frame {position} carries index {frame.index}")
        if previous_t is not None and not frame.t > previous_t:
            problems.append(f"frame {frame.index}: t={frame.t!r} does not increase")
        previous_t = frame.t
        if not math.isfinite(frame.t):
            problems.append(f"frame {frame.index}: non-finite t")
        for of in frame.objects:
            for label, arr in (
                ("position", of.positions),
                ("velocity", of.velocities),
                ("force", of.forces),
                ("mass", of.masses),
            ):
                if not np.isfinite(arr).all():
                    problems.append(
                        f"frame {frame.index}, object {of.object_id}: non-finite {label}"
                    )
    return problems


# ---------------------------------------------------------------------------
# recorder
# ---------------------------------------------------------------------------


@dataclass
class RecorderConfig:
    capacity: int = 36000                      # 10 min at 60 Hz
    default_dir: Union[str, Path] = "./recordings"
    format: DumpFormat = DumpFormat.XML
    created_stamp: Optional[str] = None        # None: wall clock at start

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("recorder capacity must be positive")


@dataclass(frozen=True)
class SavePrompt:
    default_name: str
    default_dir: str
    frame_count: int


class Recorder:
    """Accumulates one FrameRecord per tick up to a fixed capacity."""

    def __init__(self, config: RecorderConfig, dt: float, integrator: str, scene_digest: str):
        self.config = config
        self.capturing = True
        self.frames: list = []
        self.pending_markers: list = []
        created = config.created_stamp or utc_stamp()
        self.meta = RecordingMeta(created, dt, integrator, scene_digest)

    def add_marker(self, text: str) -> None:
        """Attach a marker to the next captured frame."""
        self.pending_markers.append(text)

    def record(self, snapshot) -> None:
        if not self.capturing:
            raise NotRecording("recorder is not capturing")
        if len(self.frames) >= self.config.capacity:
            self.capturing = False
            raise CapacityExceeded(
                f"recorder buffer full at {self.config.capacity} frames"
            )
        markers, self.pending_markers = self.pending_markers, []
        objects = [
            ObjectFrame(o.id, o.positions, o.velocities, o.forces, o.masses)
            for o in snapshot.objects
        ]
        self.frames.append(
            FrameRecord(index=len(self.frames), t=snapshot.clock, objects=objects, markers=markers)
        )

    def stop(self) -> None:
        self.capturing = False

    def recording(self) -> Recording:
        return Recording(self.meta, list(self.frames))

    def default_name(self) -> str:
        return f"simulation-{utc_stamp_basic()}.{self.config.format.value}"

    def prompt(self) -> SavePrompt:
        return SavePrompt(
            default_name=self.default_name(),
            default_dir=str(self.config.default_dir),
            frame_count=len(self.frames),
        )

    def save(self, name: Optional[str] = None, directory: Optional[Union[str, Path]] = None) -> Path:
        """Serialize the buffer; returns the file path.

        The default directory is created on demand; an explicit override
        must already exist (the UI's browse dialog picks existing folders),
        so a bogus path surfaces as OSError.
        """
        filename = name or self.default_name()
        extension = f".{self.config.format.value}"
        if not filename.endswith(extension):
            filename += extension
        if directory is None:
            directory = Path(self.config.default_dir)
            directory.mkdir(parents=True, exist_ok=True)
        else:
            directory = Path(directory)
        path = directory / filename
        write_recording(self.recording(), path, self.config.format)
        return path


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _open_sink(sink: Sink, binary: bool):
    if isinstance(sink, (str, Path)):
        return open(sink, "wb" if binary else "w", **({} if binary else {"newline": ""})), True
    return sink, False


def write_xml(recording: Recording, sink: Sink) -> None:
    root = ET.Element(
        "simulation",
        {
            "dt": fmt_real(recording.meta.dt),
            "integrator": recording.meta.integrator,
            "created": recording.meta.created,
            "scene_digest": recording.meta.scene_digest,
        },
    )
    for frame in recording.frames:
        fe = ET.SubElement(root, "frame", {"index": str(frame.index), "t": fmt_real(frame.t)})
        for marker in frame.markers:
            ET.SubElement(fe, "marker", {"name": marker})
        for of in frame.objects:
            oe = ET.SubElement(fe, "object", {"id": str(of.object_id)})
            for i in range(of.positions.shape[0]):
                p, v, f = of.positions[i], of.velocities[i], of.forces[i]
                ET.SubElement(
                    oe,
                    "particle",
                    {
                        "id": str(i),
                        "px": fmt_real(p[0]), "py": fmt_real(p[1]), "pz": fmt_real(p[2]),
                        "vx": fmt_real(v[0]), "vy": fmt_real(v[1]), "vz": fmt_real(v[2]),
                        "fx": fmt_real(f[0]), "fy": fmt_real(f[1]), "fz": fmt_real(f[2]),
                        "m": fmt_real(of.masses[i]),
                    },
                )
    tree = ET.ElementTree(root)
    ET.indent(tree)
    handle, owned = _open_sink(sink, binary=True)
    try:
        tree.write(handle, encoding="utf-8", xml_declaration=True)
    finally:
        if owned:
            handle.close()


CSV_HEADER = "frame,t,object,particle,px,py,pz,vx,vy,vz,fx,fy,fz,mass"


def write_csv(recording: Recording, sink: Sink) -> None:
    handle, owned = _open_sink(sink, binary=False)
    try:
        handle.write(CSV_HEADER + "\n")
        for frame in recording.frames:
            t = fmt_real(frame.t)
            for of in frame.objects:
                for i in range(of.positions.shape[0]):
                    p, v, f = of.positions[i], of.velocities[i], of.forces[i]
                    handle.write(
                        f"{frame.index},{t},{of.object_id},{i},"
                        f"{fmt_real(p[0])},{fmt_real(p[1])},{fmt_real(p[2])},"
                        f"{fmt_real(v[0])},{fmt_real(v[1])},{fmt_real(v[2])},"
                        f"{fmt_real(f[0])},{fmt_real(f[1])},{fmt_real(f[2])},"
                        f"{fmt_real(of.masses[i])}\n"
                    )
    finally:
        if owned:
            handle.close()


def write_recording(recording: Recording, sink: Sink, format: DumpFormat) -> None:
    if format is DumpFormat.XML:
        write_xml(recording, sink)
    else:
        write_csv(recording, sink)


def _attr(element, name: str) -> str:
    value = element.get(name)
    if value is None:
        raise ParseError(f"<{element.tag}> is missing attribute {name!r}")
    return value


def _real(element, name: str) -> float:
    text = _attr(element, name)
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"<{element.tag}> attribute {name}={text!r} is not a number") from None


def _int(element, name: str) -> int:
    text = _attr(element, name)
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"<{element.tag}> attribute {name}={text!r} is not an integer") from None


def load_xml(source: Sink, strict: bool = True) -> Recording:
    """Parse a state dump written by :func:`write_xml`.

    ``strict`` additionally enforces the recording invariants (finite
    values, strictly increasing t, consecutive indices, positive dt); the
    replay checker loads leniently and reports violations itself.
    """
    try:
        tree = ET.parse(source)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    root = tree.getroot()
    if root.tag != "simulation":
        raise ParseError(f"expected <simulation> root, found <{root.tag}>")
    meta = RecordingMeta(
        created=_attr(root, "created"),
        dt=_real(root, "dt"),
        integrator=_attr(root, "integrator"),
        scene_digest=root.get("scene_digest", ""),
    )
    frames = []
    for fe in root:
        if fe.tag != "frame":
            raise ParseError(f"unexpected element <{fe.tag}> inside <simulation>")
        markers = []
        objects = []
        for child in fe:
            if child.tag == "marker":
                markers.append(_attr(child, "name"))
            elif child.tag == "object":
                particles = list(child)
                n = len(particles)
                positions = np.zeros((n, 3))
                velocities = np.zeros((n, 3))
                forces = np.zeros((n, 3))
                masses = np.zeros(n)
                for row, pe in enumerate(particles):
                    if pe.tag != "particle":
                        raise ParseError(f"unexpected element <{pe.tag}> inside <object>")
                    if _int(pe, "id") != row:
                        raise ParseError(f"particle ids must be consecutive from 0, got {pe.get('id')}")
                    positions[row] = (_real(pe, "px"), _real(pe, "py"), _real(pe, "pz"))
                    velocities[row] = (_real(pe, "vx"), _real(pe, "vy"), _real(pe, "vz"))
                    forces[row] = (_real(pe, "fx"), _real(pe, "fy"), _real(pe, "fz"))
                    masses[row] = _real(pe, "m")
                objects.append(
                    ObjectFrame(_int(child, "id"), positions, velocities, forces, masses)
                )
            else:
                raise ParseError(f"unexpected element <{child.tag}> inside <frame>")
        frames.append(
            FrameRecord(index=_int(fe, "index"), t=_real(fe, "t"), objects=objects, markers=markers)
        )
    recording = Recording(meta, frames)
    if strict:
        problems = validate_recording(recording)
        if problems:
            raise ParseError("; ".join(problems))
    return recording


def replay(recording: Recording) -> Iterator[FrameRecord]:
    """Yield frames in order so a renderer can be driven without dynamics."""
    yield from recording.frames
