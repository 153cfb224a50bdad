"""Simulation session: command queue, drag lifecycle, idle wander, frames.

Exactly one loop thread may call :meth:`Session.tick`; commands can be
submitted from any thread through the FIFO queue.  Snapshots returned by
``tick`` are immutable values safe to hand to any consumer.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from collections import deque
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np

from . import dynamics, mesh
from .errors import (
    AlreadyRecording,
    AlreadyRunning,
    CapacityExceeded,
    EmptyWorld,
    InvalidArgument,
    NoActiveDrag,
    NotRecording,
    NotRunning,
    NothingToSave,
    NumericalBlowup,
    SameDimension,
    SoftBodyError,
    UnsupportedDimension,
)
from .model import Dimension, DragHandle, IntegratorKind, WorldState, vec3
from .persistence import Recorder, RecorderConfig, SavePrompt
from .scene import SceneConfig, build_world

logger = logging.getLogger(__name__)

#: arrow-key nudge, as a fraction of the per-axis view extent
NUDGE_FRACTION = 0.01
#: idle targets are drawn inside bounds shrunk by this margin per side
IDLE_TARGET_MARGIN = 0.1


class Mode(enum.Enum):
    IDLE = "idle"
    RUNNING = "running"


class Direction(enum.Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"


_DIRECTION_VECTORS = {
    Direction.UP: (1, 1.0),
    Direction.DOWN: (1, -1.0),
    Direction.LEFT: (0, -1.0),
    Direction.RIGHT: (0, 1.0),
}


# -- commands ---------------------------------------------------------------


@dataclass(frozen=True)
class StartSimulation:
    pass


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class DragStart:
    point: tuple


@dataclass(frozen=True)
class DragMove:
    point: tuple


@dataclass(frozen=True)
class DragEnd:
    pass


@dataclass(frozen=True)
class Nudge:
    direction: Direction


@dataclass(frozen=True)
class SetIntegrator:
    kind: IntegratorKind


@dataclass(frozen=True)
class SetDimension:
    dimension: Dimension


@dataclass(frozen=True)
class LinkObjects:
    object_a: int
    particle_a: int
    object_b: int
    particle_b: int
    stiffness: float = 100.0
    damping: float = 1.0


@dataclass(frozen=True)
class StartSave:
    pass


@dataclass(frozen=True)
class StopSave:
    pass


@dataclass(frozen=True)
class SaveConfirm:
    name: Optional[str] = None
    directory: Optional[str] = None


# -- events (drained by the protocol server / CLI) --------------------------


@dataclass(frozen=True)
class ErrorEvent:
    code: str
    message: str


@dataclass(frozen=True)
class SavePromptEvent:
    default_name: str
    default_dir: str
    frames: int


@dataclass(frozen=True)
class SavedEvent:
    path: str


@dataclass(frozen=True)
class StateEvent:
    mode: str
    integrator: str
    dimension: int
    recording: bool


# -- snapshots ---------------------------------------------------------------


@dataclass(frozen=True)
class ObjectSnapshot:
    id: int
    positions: np.ndarray
    velocities: np.ndarray
    forces: np.ndarray
    masses: np.ndarray
    springs: np.ndarray


@dataclass(frozen=True)
class FrameSnapshot:
    clock: float
    mode: Mode
    integrator: IntegratorKind
    dimension: Dimension
    objects: tuple
    drag_force: Optional[np.ndarray]
    drag_magnitude: str
    topology_serial: int


@dataclass
class IdleWander:
    """Autonomous random-target steering used before a simulation starts."""

    rng: random.Random
    steering_gain: float = 5.0
    arrival_fraction: float = 0.05
    target: Optional[np.ndarray] = None


def format_force_magnitude(force) -> str:
    """``|force|`` with exactly four digits after the point (half away from zero)."""
    arr = np.asarray(force, dtype=np.float64)
    value = float(np.linalg.norm(arr))
    if not math.isfinite(value):
        raise InvalidArgument("force magnitude must be finite")
    return str(Decimal(repr(value)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


def nearest_particle(world: WorldState, point) -> tuple:
    """Particle closest to ``point``; ties go to the lower (object, particle) id.

    Returns ``(object_id, particle_id, distance)``.
    """
    if world.particle_count == 0:
        raise EmptyWorld("world has no particles")
    p = vec3(point)
    best = None
    for oid in sorted(world.objects):
        delta = world.objects[oid].positions - p
        d2 = delta[:, 0] ** 2 + delta[:, 1] ** 2 + delta[:, 2] ** 2
        i = int(np.argmin(d2))
        if best is None or d2[i] < best[0]:
            best = (float(d2[i]), oid, i)
    return best[1], best[2], math.sqrt(best[0])


class _SaveState(enum.Enum):
    NONE = "none"
    RECORDING = "recording"
    PROMPT = "prompt"


class Session:
    """Owns one world and the full user-visible interaction lifecycle."""

    def __init__(self, scene: SceneConfig, recorder_config: Optional[RecorderConfig] = None):
        self.scene = scene
        self.integrator = scene.integrator
        self.dt = scene.dt
        self.dimension = scene.dimension
        self.mode = Mode.IDLE
        self.world = build_world(scene)
        self.recorder_config = recorder_config or RecorderConfig()

        self.idle: Optional[IdleWander] = IdleWander(rng=random.Random(scene.seed))
        self._commands: deque = deque()
        self._events: list = []
        self._save_state = _SaveState.NONE
        self._recorder: Optional[Recorder] = None
        self._topology_serial = 0
        self._builders = {
            Dimension.D1: self._build_for_dimension,
            Dimension.D2: self._build_for_dimension,
            Dimension.D3: self._build_for_dimension,
        }

    # -- command queue ----------------------------------------------------

    def submit(self, command) -> None:
        """Enqueue a command; applied at the start of the next tick (FIFO)."""
        self._commands.append(command)

    def drain_events(self) -> list:
        events, self._events = self._events, []
        return events

    def _emit(self, event) -> None:
        self._events.append(event)

    def _emit_error(self, exc: Exception) -> None:
        code = getattr(exc, "code", "io_error" if isinstance(exc, OSError) else "error")
        logger.warning("command rejected: %s (%s)", exc, code)
        self._emit(ErrorEvent(code=code, message=str(exc)))

    # -- session state ------------------------------------------------------

    @property
    def clock(self) -> float:
        return self.world.clock

    @property
    def drag(self) -> Optional[DragHandle]:
        return self.world.drag

    @property
    def recorder_attached(self) -> bool:
        return self._save_state is _SaveState.RECORDING

    def state_event(self) -> StateEvent:
        return StateEvent(
            mode=self.mode.value,
            integrator=self.integrator.value,
            dimension=self.dimension.value,
            recording=self.recorder_attached,
        )

    # -- user operations ------------------------------------------------------

    def start(self) -> None:
        if self.mode is not Mode.IDLE:
            raise AlreadyRunning("simulation already started")
        self.mode = Mode.RUNNING
        self.idle = None
        self.world.set_external_forces([])
        self._emit(self.state_event())

    def reset(self) -> None:
        """Back to the configured idle scene; the clock keeps running."""
        if self.mode is not Mode.RUNNING:
            raise NotRunning("reset applies to a running simulation")
        clock = self.world.clock
        self.world = build_world(self.scene)
        self.world.clock = clock
        self.dimension = self.scene.dimension
        self.mode = Mode.IDLE
        self.idle = IdleWander(rng=random.Random(self.scene.seed))
        self._topology_serial += 1
        self._emit(self.state_event())

    def begin_drag(self, point) -> DragHandle:
        if self.mode is not Mode.RUNNING:
            raise NotRunning("start the simulation before dragging")
        oid, pid, _ = nearest_particle(self.world, point)
        target = self.world.params.clamp(vec3(point))
        handle = DragHandle(object=oid, particle=pid, target=target)
        self.world.drag = handle
        return handle

    def update_drag(self, point) -> None:
        handle = self._require_drag()
        handle.target = self.world.params.clamp(vec3(point))

    def end_drag(self) -> None:
        self._require_drag()
        self.world.drag = None

    def nudge(self, direction: Direction) -> None:
        handle = self._require_drag()
        axis, sign = _DIRECTION_VECTORS[direction]
        params = self.world.params
        step = NUDGE_FRACTION * (params.bounds_max[axis] - params.bounds_min[axis])
        target = handle.target.copy()
        target[axis] += sign * step
        handle.target = params.clamp(target)

    def _require_drag(self) -> DragHandle:
        if self.world.drag is None or not self.world.drag.active:
            raise NoActiveDrag("no drag handle is active")
        return self.world.drag

    def set_integrator(self, kind: IntegratorKind) -> None:
        self.integrator = kind
        self._emit(self.state_event())

    def change_dimension(self, dimension: Dimension) -> None:
        """Swap the world for the given dimension's configured default object."""
        if dimension is self.dimension:
            raise SameDimension(f"already in {dimension.value}D")
        builder = self._builders.get(dimension)
        if builder is None:
            raise UnsupportedDimension(f"no builder available for {dimension.value}D")
        clock = self.world.clock
        self.world = builder(dimension)
        self.world.clock = clock
        self.dimension = dimension
        if self.idle is not None:
            self.idle.target = None
        self._topology_serial += 1
        if self._save_state is _SaveState.RECORDING:
            self._recorder.add_marker(f"dimension_change:{dimension.name}")
        self._emit(self.state_event())

    def _build_for_dimension(self, dimension: Dimension) -> WorldState:
        return build_world(self.scene, dimension)

    def link(self, command: LinkObjects) -> int:
        link_id = mesh.link_objects(
            self.world,
            command.object_a, command.particle_a,
            command.object_b, command.particle_b,
            command.stiffness, command.damping,
        )
        self._topology_serial += 1
        return link_id

    # -- recording ----------------------------------------------------------

    def start_recording(self, config: Optional[RecorderConfig] = None) -> None:
        if self._save_state is not _SaveState.NONE:
            raise AlreadyRecording("a recording is already in progress")
        self._recorder = Recorder(
            config or self.recorder_config,
            dt=self.dt,
            integrator=self.integrator.value,
            scene_digest=self.scene.digest,
        )
        self._save_state = _SaveState.RECORDING
        self._emit(self.state_event())

    def stop_recording(self) -> SavePrompt:
        if self._save_state is not _SaveState.RECORDING:
            raise NotRecording("no recording in progress")
        self._recorder.stop()
        self._save_state = _SaveState.PROMPT
        return self._recorder.prompt()

    def confirm_save(self, name: Optional[str] = None, directory: Optional[str] = None):
        if self._save_state is not _SaveState.PROMPT or self._recorder is None:
            raise NothingToSave("no stopped recording awaits confirmation")
        path = self._recorder.save(name, directory)
        self._recorder = None
        self._save_state = _SaveState.NONE
        self._emit(self.state_event())
        return path

    def take_recording(self):
        """Detach and return the current buffer (headless --record runs)."""
        if self._recorder is None:
            raise NotRecording("no recorder attached")
        recording = self._recorder.recording()
        self._recorder = None
        self._save_state = _SaveState.NONE
        return recording

    # -- the loop ------------------------------------------------------------

    def tick(self, dt: Optional[float] = None) -> FrameSnapshot:
        """Drain commands, advance one step, feed the recorder, snapshot."""
        dt = self.dt if dt is None else dt
        for _ in range(len(self._commands)):
            command = self._commands.popleft()
            try:
                self._apply(command)
            except (SoftBodyError, OSError) as exc:
                self._emit_error(exc)

        if self.mode is Mode.IDLE:
            breakdown, stepped = self._idle_update(dt)
        else:
            breakdown, stepped = self._advance(dt)

        snapshot = self._snapshot(breakdown)
        if stepped and self._save_state is _SaveState.RECORDING:
            try:
                self._recorder.record(snapshot)
            except CapacityExceeded as exc:
                self._save_state = _SaveState.PROMPT
                self._emit(ErrorEvent(code=exc.code, message=str(exc)))
                prompt = self._recorder.prompt()
                self._emit(SavePromptEvent(prompt.default_name, prompt.default_dir, prompt.frame_count))
        return snapshot

    def _apply(self, command) -> None:
        match command:
            case StartSimulation():
                self.start()
            case Reset():
                self.reset()
            case DragStart(point=point):
                self.begin_drag(point)
            case DragMove(point=point):
                self.update_drag(point)
            case DragEnd():
                self.end_drag()
            case Nudge(direction=direction):
                self.nudge(direction)
            case SetIntegrator(kind=kind):
                self.set_integrator(kind)
            case SetDimension(dimension=dimension):
                self.change_dimension(dimension)
            case LinkObjects():
                self.link(command)
            case StartSave():
                self.start_recording()
            case StopSave():
                prompt = self.stop_recording()
                self._emit(SavePromptEvent(prompt.default_name, prompt.default_dir, prompt.frame_count))
            case SaveConfirm(name=name, directory=directory):
                path = self.confirm_save(name, directory)
                self._emit(SavedEvent(path=str(path)))
            case _:
                raise InvalidArgument(f"unknown command {command!r}")

    def _advance(self, dt: float):
        """Force pipeline, integrator step, boundary resolution."""
        breakdown = dynamics.total_force(self.world)
        try:
            dynamics.step(self.world, dt, self.integrator)
        except NumericalBlowup as exc:
            logger.error("integration blew up; state rolled back", exc_info=True)
            self._emit(ErrorEvent(code=exc.code, message=str(exc)))
            return breakdown, False
        dynamics.project_to_bounds(self.world)
        return breakdown, True

    def _idle_update(self, dt: float):
        """Wander toward a random target using the configured force setup."""
        wander = self.idle
        params = self.world.params
        if self.world.objects:
            primary_id = min(self.world.objects)
            primary = self.world.objects[primary_id]
            if wander.target is None:
                wander.target = self._draw_idle_target()
            centroid = primary.centroid()
            steering = wander.steering_gain * (wander.target - centroid) / primary.n_particles
            self.world.set_external_forces(
                [(primary_id, i, steering) for i in range(primary.n_particles)]
            )
            arrival = wander.arrival_fraction * params.extent
            if float(np.linalg.norm(centroid - wander.target)) < arrival:
                wander.target = self._draw_idle_target()
        result = self._advance(dt)
        self.world.set_external_forces([])
        return result

    def _draw_idle_target(self) -> np.ndarray:
        params = self.world.params
        span = params.bounds_max - params.bounds_min
        lo = params.bounds_min + IDLE_TARGET_MARGIN * span
        hi = params.bounds_max - IDLE_TARGET_MARGIN * span
        active_axes = self.dimension.value
        coords = [
            self.idle.rng.uniform(lo[axis], hi[axis]) if axis < active_axes else 0.0
            for axis in range(3)
        ]
        return params.clamp(vec3(coords))

    def _snapshot(self, breakdown) -> FrameSnapshot:
        objects = []
        for oid in sorted(self.world.objects):
            obj = self.world.objects[oid]
            arrays = [obj.positions.copy(), obj.velocities.copy(), obj.forces.copy(), obj.masses.copy()]
            for arr in arrays:
                arr.setflags(write=False)
            objects.append(ObjectSnapshot(oid, *arrays, springs=obj.spring_pairs()))

        drag_force = None
        handle = self.world.drag
        if handle is not None and handle.active:
            drag_force = np.array(
                breakdown.source_at(dynamics.ForceSource.MOUSE, handle.object, handle.particle)
            )
            drag_force.setflags(write=False)
        return FrameSnapshot(
            clock=self.world.clock,
            mode=self.mode,
            integrator=self.integrator,
            dimension=self.dimension,
            objects=tuple(objects),
            drag_force=drag_force,
            drag_magnitude=format_force_magnitude(drag_force if drag_force is not None else (0.0, 0.0, 0.0)),
            topology_serial=self._topology_serial,
        )
