"""Websocket session server and the JSON wire codecs.

One controlling client at a time on ``ws://host:port/session``; extra
connections are answered with a ``busy`` error and closed.  Commands are
never dropped (FIFO into the session); frames are droppable - a slow
client receives the latest frame, not a backlog.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import threading
from collections import deque
from typing import Optional

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .errors import DecodeError
from .model import Dimension, IntegratorKind
from .session import (
    DragEnd,
    DragMove,
    DragStart,
    Direction,
    ErrorEvent,
    LinkObjects,
    Nudge,
    Reset,
    SaveConfirm,
    SavedEvent,
    SavePromptEvent,
    Session,
    SetDimension,
    SetIntegrator,
    StartSave,
    StartSimulation,
    StateEvent,
    StopSave,
)

logger = logging.getLogger(__name__)

ENDPOINT_PATH = "/session"
DEFAULT_PORT = 8080


# ---------------------------------------------------------------------------
# codecs
# ---------------------------------------------------------------------------


def _reject_constant(name):
    raise DecodeError(f"non-finite JSON constant {name!r} is not allowed")


def _number(payload: dict, key: str) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(f"field {key!r} must be a number")
    if not math.isfinite(value):
        raise DecodeError(f"field {key!r} must be finite")
    return float(value)


def _integer(payload: dict, key: str) -> int:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise DecodeError(f"field {key!r} must be an integer")
    return value


def _point(payload: dict) -> tuple:
    return (_number(payload, "x"), _number(payload, "y"), _number(payload, "z"))


def decode_client(raw) -> object:
    """Parse one client message into a session command."""
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8", errors="replace")
    if isinstance(raw, str):
        try:
            payload = json.loads(raw, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise DecodeError(f"malformed JSON: {exc}") from exc
    else:
        payload = raw
    if not isinstance(payload, dict):
        raise DecodeError("client messages must be JSON objects")

    kind = payload.get("type")
    if kind == "start":
        return StartSimulation()
    if kind == "reset":
        return Reset()
    if kind == "drag_start":
        return DragStart(point=_point(payload))
    if kind == "drag_move":
        return DragMove(point=_point(payload))
    if kind == "drag_end":
        return DragEnd()
    if kind == "nudge":
        try:
            return Nudge(direction=Direction(payload.get("dir")))
        except ValueError:
            raise DecodeError(f"unknown nudge direction {payload.get('dir')!r}") from None
    if kind == "set_integrator":
        try:
            return SetIntegrator(kind=IntegratorKind(payload.get("kind")))
        except ValueError:
            raise DecodeError(f"unknown integrator {payload.get('kind')!r}") from None
    if kind == "set_dimension":
        try:
            return SetDimension(dimension=Dimension(_integer(payload, "d")))
        except ValueError:
            raise DecodeError(f"dimension must be 1, 2 or 3") from None
    if kind == "link":
        stiffness = payload.get("stiffness", 100.0)
        damping = payload.get("damping", 1.0)
        if isinstance(stiffness, bool) or not isinstance(stiffness, (int, float)):
            raise DecodeError("field 'stiffness' must be a number")
        if isinstance(damping, bool) or not isinstance(damping, (int, float)):
            raise DecodeError("field 'damping' must be a number")
        return LinkObjects(
            object_a=_integer(payload, "a"),
            particle_a=_integer(payload, "pa"),
            object_b=_integer(payload, "b"),
            particle_b=_integer(payload, "pb"),
            stiffness=float(stiffness),
            damping=float(damping),
        )
    if kind == "start_save":
        return StartSave()
    if kind == "stop_save":
        return StopSave()
    if kind == "save_confirm":
        name = payload.get("name")
        directory = payload.get("dir")
        if name is not None and not isinstance(name, str):
            raise DecodeError("field 'name' must be a string")
        if directory is not None and not isinstance(directory, str):
            raise DecodeError("field 'dir' must be a string")
        return SaveConfirm(name=name, directory=directory)
    raise DecodeError(f"unknown message type {kind!r}")


def encode_client(command) -> dict:
    """Inverse of :func:`decode_client` for schema-conformant commands."""
    if isinstance(command, StartSimulation):
        return {"type": "start"}
    if isinstance(command, Reset):
        return {"type": "reset"}
    if isinstance(command, DragStart):
        x, y, z = command.point
        return {"type": "drag_start", "x": x, "y": y, "z": z}
    if isinstance(command, DragMove):
        x, y, z = command.point
        return {"type": "drag_move", "x": x, "y": y, "z": z}
    if isinstance(command, DragEnd):
        return {"type": "drag_end"}
    if isinstance(command, Nudge):
        return {"type": "nudge", "dir": command.direction.value}
    if isinstance(command, SetIntegrator):
        return {"type": "set_integrator", "kind": command.kind.value}
    if isinstance(command, SetDimension):
        return {"type": "set_dimension", "d": command.dimension.value}
    if isinstance(command, LinkObjects):
        return {
            "type": "link",
            "a": command.object_a,
            "pa": command.particle_a,
            "b": command.object_b,
            "pb": command.particle_b,
            "stiffness": command.stiffness,
            "damping": command.damping,
        }
    if isinstance(command, StartSave):
        return {"type": "start_save"}
    if isinstance(command, StopSave):
        return {"type": "stop_save"}
    if isinstance(command, SaveConfirm):
        message = {"type": "save_confirm"}
        if command.name is not None:
            message["name"] = command.name
        if command.directory is not None:
            message["dir"] = command.directory
        return message
    raise DecodeError(f"cannot encode {command!r}")


def encode_frame(snapshot, include_topology: bool = False) -> dict:
    """Frame message; spring topology rides along only when requested."""
    objects = []
    for obj in snapshot.objects:
        particles = []
        pos = obj.positions
        vel = obj.velocities
        for i in range(pos.shape[0]):
            particles.append(
                {
                    "id": i,
                    "px": float(pos[i, 0]), "py": float(pos[i, 1]), "pz": float(pos[i, 2]),
                    "vx": float(vel[i, 0]), "vy": float(vel[i, 1]), "vz": float(vel[i, 2]),
                }
            )
        record = {"id": obj.id, "particles": particles}
        if include_topology:
            record["springs"] = [[int(a), int(b)] for a, b in obj.springs]
        objects.append(record)
    message = {
        "type": "frame",
        "t": float(snapshot.clock),
        "objects": objects,
        "drag_force": snapshot.drag_magnitude,
    }
    if include_topology:
        message["topology"] = True
    return message


def event_message(event) -> dict:
    if isinstance(event, ErrorEvent):
        return {"type": "error", "code": event.code, "message": event.message}
    if isinstance(event, SavePromptEvent):
        return {
            "type": "save_prompt",
            "default_name": event.default_name,
            "default_dir": event.default_dir,
            "frames": event.frames,
        }
    if isinstance(event, SavedEvent):
        return {"type": "saved", "path": event.path}
    if isinstance(event, StateEvent):
        return {
            "type": "state",
            "mode": event.mode,
            "integrator": event.integrator,
            "dimension": event.dimension,
            "recording": event.recording,
        }
    raise DecodeError(f"cannot encode event {event!r}")


# ---------------------------------------------------------------------------
# server
# ---------------------------------------------------------------------------


class _Client:
    """Outbound state per connection: reliable events, droppable frames."""

    def __init__(self, connection):
        self.connection = connection
        self.events: deque = deque()
        self.frame = None                  # (snapshot, include_topology)
        self.wake = asyncio.Event()
        self.last_topology_serial = None

    def push_event(self, message: dict) -> None:
        self.events.append(message)
        self.wake.set()

    def set_frame(self, snapshot, include_topology: bool) -> None:
        if self.frame is not None:
            include_topology = include_topology or self.frame[1]
        self.frame = (snapshot, include_topology)
        self.wake.set()


class SessionServer:
    """Drives one session at its frame rate and serves it over websockets."""

    def __init__(self, session: Session, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.session = session
        self.host = host
        self.port = port
        self.bound_port: Optional[int] = None
        self._controller: Optional[_Client] = None
        self._stop: Optional[asyncio.Event] = None

    async def serve(self, ready: Optional[threading.Event] = None) -> None:
        """Run until :meth:`request_stop` (or task cancellation)."""
        self._stop = asyncio.Event()
        async with ws_serve(
            self._handler, self.host, self.port, process_request=self._process_request
        ) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            if ready is not None:
                ready.set()
            loop_task = asyncio.create_task(self._tick_loop())
            try:
                await self._stop.wait()
            finally:
                loop_task.cancel()

    def request_stop(self) -> None:
        if self._stop is not None:
            self._stop.set()

    def _process_request(self, connection, request):
        if request.path != ENDPOINT_PATH:
            return connection.respond(404, f"unknown endpoint {request.path!r}\n")
        return None

    async def _handler(self, connection) -> None:
        if self._controller is not None:
            await connection.send(json.dumps({
                "type": "error",
                "code": "busy",
                "message": "another controller is connected",
            }))
            await connection.close()
            return

        client = _Client(connection)
        self._controller = client
        client.push_event(event_message(self.session.state_event()))
        sender = asyncio.create_task(self._sender(client))
        try:
            async for raw in connection:
                try:
                    command = decode_client(raw)
                except DecodeError as exc:
                    client.push_event({"type": "error", "code": exc.code, "message": str(exc)})
                    continue
                self.session.submit(command)
        except ConnectionClosed:
            pass
        finally:
            sender.cancel()
            if self._controller is client:
                self._controller = None

    async def _sender(self, client: _Client) -> None:
        try:
            while True:
                await client.wake.wait()
                client.wake.clear()
                while client.events:
                    await client.connection.send(json.dumps(client.events.popleft()))
                if client.frame is not None:
                    snapshot, topology = client.frame
                    client.frame = None
                    await client.connection.send(json.dumps(encode_frame(snapshot, topology)))
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.session.dt
        next_time = loop.time()
        while True:
            try:
                snapshot = self.session.tick()
            except Exception:
                logger.exception("session tick failed; stopping the server")
                self.request_stop()
                return
            events = self.session.drain_events()
            client = self._controller
            if client is not None:
                for event in events:
                    client.push_event(event_message(event))
                include = client.last_topology_serial != snapshot.topology_serial
                client.set_frame(snapshot, include)
                client.last_topology_serial = snapshot.topology_serial
            next_time += dt
            delay = next_time - loop.time()
            if delay < -1.0:
                next_time = loop.time()  # fell far behind; resynchronise
            await asyncio.sleep(max(0.0, delay))


def serve(session: Session, port: int = DEFAULT_PORT, host: str = "127.0.0.1") -> None:
    """Blocking entry point; returns cleanly on KeyboardInterrupt."""
    server = SessionServer(session, host=host, port=port)

    async def main():
        task = asyncio.create_task(server.serve())
        try:
            await task
        except asyncio.CancelledError:
            pass

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        logger.info("server interrupted; shutting down")


class ServerThread:
    """Background server for tests and embedding: start(), .port, stop()."""

    def __init__(self, session: Session, host: str = "127.0.0.1", port: int = 0):
        self.server = SessionServer(session, host=host, port=port)
        self._thread: Optional[threading.Thread] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._error: Optional[BaseException] = None

    @property
    def port(self) -> int:
        return self.server.bound_port

    def start(self) -> "ServerThread":
        ready = threading.Event()

        def run():
            try:
                asyncio.run(self._main(ready))
            except BaseException as exc:  # surfaced to start()
                self._error = exc
            finally:
                ready.set()

        self._thread = threading.Thread(target=run, name="softbody-server", daemon=True)
        self._thread.start()
        ready.wait(timeout=10.0)
        if self._error is not None:
            raise self._error
        if self.server.bound_port is None:
            raise RuntimeError("server failed to start")
        return self

    async def _main(self, ready) -> None:
        self._loop = asyncio.get_running_loop()
        await self.server.serve(ready)

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self.server.request_stop)
        if self._thread is not None:
            self._thread.join(timeout=10.0)
