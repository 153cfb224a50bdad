"""Headless command-line entry point.

Subcommands: ``run`` (batch simulation), ``replay`` (dump playback and
validation), ``script`` (timed command scripts against a session), ``ahp``
(pairwise prioritization), ``serve`` (websocket server) and ``bench``
(kernel backend comparison).

Exit codes: 0 success, 1 failed --check validation, 2 configuration or
input error, 3 numerical blowup.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

from . import ahp, dynamics, kernels, persistence, protocol
from .errors import NumericalBlowup, SceneError, SoftBodyError
from .model import IntegratorKind
from .persistence import DumpFormat, RecorderConfig
from .scene import load_scene
from .session import ErrorEvent, SavedEvent, Session

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def _deterministic_stamp() -> str:
    """Headless recordings pin their creation stamp for byte-reproducibility."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    from datetime import datetime, timezone

    return datetime.fromtimestamp(epoch, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _recorder_config(args, steps: int) -> RecorderConfig:
    fmt = DumpFormat(args.format) if args.format else _format_for(args.record)
    capacity = args.capacity if args.capacity else max(steps, 1)
    return RecorderConfig(
        capacity=capacity,
        format=fmt,
        created_stamp=_deterministic_stamp(),
    )


def _format_for(path) -> DumpFormat:
    if path and str(path).lower().endswith(".csv"):
        return DumpFormat.CSV
    return DumpFormat.XML


def _apply_overrides(scene_config, args):
    if getattr(args, "integrator", None):
        scene_config.integrator = IntegratorKind(args.integrator)
    if getattr(args, "dt", None):
        if not 0.0 < args.dt <= dynamics.MAX_DT:
            raise SceneError(f"dt must lie in (0, {dynamics.MAX_DT}], got {args.dt}")
        scene_config.dt = args.dt
    return scene_config


def _blowup_seen(events) -> bool:
    return any(isinstance(e, ErrorEvent) and e.code == "numerical_blowup" for e in events)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    scene_config = _apply_overrides(load_scene(args.scene), args)
    session = Session(scene_config)
    recording_requested = args.record is not None
    if recording_requested:
        session.start_recording(_recorder_config(args, args.steps))

    for _ in range(args.steps):
        session.tick()
        events = session.drain_events()
        if _blowup_seen(events):
            print("numerical blowup: step rolled back, aborting run", file=sys.stderr)
            for event in events:
                if isinstance(event, ErrorEvent):
                    print(f"  [{event.code}] {event.message}", file=sys.stderr)
            return EXIT_BLOWUP

    if recording_requested:
        recording = session.take_recording()
        fmt = _format_for(args.record) if not args.format else DumpFormat(args.format)
        persistence.write_recording(recording, args.record, fmt)
        print(f"recorded {len(recording)} frames to {args.record}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def cmd_replay(args) -> int:
    recording = persistence.load_xml(args.dump, strict=False)
    count = 0
    for _frame in persistence.replay(recording):
        count += 1
    print(f"replayed {count} frames (dt={persistence.fmt_real(recording.meta.dt)}, "
          f"integrator={recording.meta.integrator})")
    if args.check:
        problems = persistence.validate_recording(recording)
        if problems:
            for problem in problems:
                print(f"invariant violation: {problem}", file=sys.stderr)
            return EXIT_CHECK_FAILED
        print("all invariants hold")
    return EXIT_OK


# ---------------------------------------------------------------------------
# script
# ---------------------------------------------------------------------------


def _load_script(path) -> list:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, list):
        raise SceneError("a command script is a JSON list of {at, command} entries")
    entries = []
    previous = -math.inf
    for item in raw:
        if not isinstance(item, dict) or "at" not in item or "command" not in item:
            raise SceneError(f"script entry {item!r} needs 'at' and 'command'")
        at = item["at"]
        if not isinstance(at, (int, float)) or not math.isfinite(at) or at < 0:
            raise SceneError(f"script time {at!r} must be a non-negative number")
        if at < previous:
            raise SceneError("script times must be non-decreasing")
        previous = at
        entries.append((float(at), protocol.decode_client(item["command"])))
    return entries


def _state_payload(session: Session, snapshot, events, saved_paths) -> dict:
    objects = []
    for obj in snapshot.objects:
        particles = []
        for i in range(obj.positions.shape[0]):
            p, v, f = obj.positions[i], obj.velocities[i], obj.forces[i]
            particles.append({
                "id": i,
                "px": float(p[0]), "py": float(p[1]), "pz": float(p[2]),
                "vx": float(v[0]), "vy": float(v[1]), "vz": float(v[2]),
                "fx": float(f[0]), "fy": float(f[1]), "fz": float(f[2]),
                "m": float(obj.masses[i]),
            })
        objects.append({"id": obj.id, "particles": particles})
    return {
        "clock": float(snapshot.clock),
        "mode": snapshot.mode.value,
        "integrator": snapshot.integrator.value,
        "dimension": snapshot.dimension.value,
        "drag_force": snapshot.drag_magnitude,
        "objects": objects,
        "events": [protocol.event_message(e) for e in events],
        "saved_paths": saved_paths,
    }


def cmd_script(args) -> int:
    scene_config = _apply_overrides(load_scene(args.scene), args)
    script = _load_script(args.script)
    session = Session(scene_config)
    if args.capacity:
        session.recorder_config = RecorderConfig(
            capacity=args.capacity, created_stamp=_deterministic_stamp()
        )

    if args.record is not None:
        session.start_recording(_recorder_config(args, args.steps or 10**6))

    dt = scene_config.dt
    steps = args.steps
    if steps is None:
        horizon = script[-1][0] if script else 0.0
        steps = int(math.ceil(horizon / dt)) + int(round(1.0 / dt))

    all_events: list = []
    saved_paths: list = []
    pending = list(script)
    snapshot = None
    for _ in range(steps):
        while pending and pending[0][0] <= session.clock + 1e-12:
            session.submit(pending.pop(0)[1])
        snapshot = session.tick()
        events = session.drain_events()
        all_events.extend(events)
        saved_paths.extend(e.path for e in events if isinstance(e, SavedEvent))
        if _blowup_seen(events):
            print(json.dumps(_state_payload(session, snapshot, all_events, saved_paths), indent=2))
            print("numerical blowup: aborting script run", file=sys.stderr)
            return EXIT_BLOWUP

    if snapshot is None:
        snapshot = session.tick()
        all_events.extend(session.drain_events())

    if args.record is not None:
        recording = session.take_recording()
        fmt = _format_for(args.record) if not args.format else DumpFormat(args.format)
        persistence.write_recording(recording, args.record, fmt)

    print(json.dumps(_state_payload(session, snapshot, all_events, saved_paths), indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# ahp
# ---------------------------------------------------------------------------


def cmd_ahp(args) -> int:
    value_matrix = ahp.load_matrix_csv(args.value_matrix)
    value_priorities = ahp.priority_vector(value_matrix)
    print("value priorities:")
    for label, weight in value_priorities.as_dict().items():
        print(f"  {label} {weight:.4f}")

    if args.cost_matrix:
        cost_matrix = ahp.load_matrix_csv(args.cost_matrix)
        cost_priorities = ahp.priority_vector(cost_matrix)
        print("cost priorities:")
        for label, weight in cost_priorities.as_dict().items():
            print(f"  {label} {weight:.4f}")
        points = ahp.cost_value_points(value_priorities, cost_priorities)
        ahp.write_points_csv(points, args.points)
        print(f"cost-value points written to {args.points}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    scene_config = _apply_overrides(load_scene(args.scene), args)
    session = Session(scene_config)
    print(f"serving scene {args.scene} on ws://{args.host}:{args.port}{protocol.ENDPOINT_PATH}")
    protocol.serve(session, port=args.port, host=args.host)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def cmd_bench(args) -> int:
    from .mesh import build_two_layer_sphere
    from .model import WorldParams, WorldState

    results = []
    for name in sorted(kernels.available_backends()):
        kernels.use_backend(name)
        sphere = build_two_layer_sphere(args.depth, 0.5, 0.6, 2.0, 10.0, 0.1, 1.0, 0.4)
        world = WorldState(WorldParams(gravity=(0.0, 0.0, 0.0)))
        world.add_object(sphere)
        kind = IntegratorKind(args.integrator)
        for _ in range(5):  # warm caches
            dynamics.step(world, 1.0 / 60.0, kind)
        start = time.perf_counter()
        for _ in range(args.ticks):
            dynamics.step(world, 1.0 / 60.0, kind)
            dynamics.project_to_bounds(world)
        elapsed = time.perf_counter() - start
        rate = args.ticks / elapsed
        results.append((name, rate))
        print(f"backend={name:9s} particles={sphere.n_particles} "
              f"springs={len(sphere.springs)} ticks={args.ticks} "
              f"elapsed={elapsed:.3f}s rate={rate:.1f} ticks/s")
    if len(results) == 2:
        slow, fast = sorted(r[1] for r in results)
        print(f"speedup: {fast / slow:.2f}x")
    kernels.use_backend("compiled" if "compiled" in kernels.available_backends() else "pure")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softbody",
        description="Soft-body simulation engine: run, record, replay, serve.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sim_flags(p, with_steps):
        if with_steps:
            p.add_argument("steps", type=int, help="number of ticks to simulate")
        p.add_argument("--record", metavar="OUT", help="write a state dump of the run")
        p.add_argument("--format", choices=["xml", "csv"], help="dump format (default: by extension)")
        p.add_argument("--integrator", choices=[k.value for k in IntegratorKind],
                       help="override the scene's integrator")
        p.add_argument("--dt", type=float, help="override the scene's timestep")
        p.add_argument("--capacity", type=int, help="recorder frame capacity")

    p_run = sub.add_parser("run", help="run a scene headlessly")
    p_run.add_argument("scene", help="scene JSON file")
    add_sim_flags(p_run, with_steps=True)
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="iterate a recorded dump")
    p_replay.add_argument("dump", help="XML state dump")
    p_replay.add_argument("--check", action="store_true", help="validate recording invariants")
    p_replay.set_defaults(func=cmd_replay)

    p_script = sub.add_parser("script", help="drive a session with a timed command script")
    p_script.add_argument("scene", help="scene JSON file")
    p_script.add_argument("script", help="command script JSON file")
    p_script.add_argument("--steps", type=int, help="ticks to run (default: script horizon + 1s)")
    add_sim_flags(p_script, with_steps=False)
    p_script.set_defaults(func=cmd_script)

    p_ahp = sub.add_parser("ahp", help="pairwise cost-value prioritization")
    p_ahp.add_argument("value_matrix", help="value comparison matrix CSV")
    p_ahp.add_argument("cost_matrix", nargs="?", help="cost comparison matrix CSV")
    p_ahp.add_argument("--points", default="cost_value.csv",
                       help="output CSV for cost-value points (default: %(default)s)")
    p_ahp.set_defaults(func=cmd_ahp)

    p_serve = sub.add_parser("serve", help="serve a live session over websockets")
    p_serve.add_argument("scene", help="scene JSON file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=protocol.DEFAULT_PORT)
    p_serve.add_argument("--integrator", choices=[k.value for k in IntegratorKind])
    p_serve.add_argument("--dt", type=float)
    p_serve.set_defaults(func=cmd_serve)

    p_bench = sub.add_parser("bench", help="compare kernel backends on a stress scene")
    p_bench.add_argument("--depth", type=int, default=2, help="sphere subdivision depth")
    p_bench.add_argument("--ticks", type=int, default=240)
    p_bench.add_argument("--integrator", choices=[k.value for k in IntegratorKind], default="rk4")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except NumericalBlowup as exc:
        print(f"numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (SoftBodyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
