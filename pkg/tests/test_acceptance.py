"""Acceptance criteria, one test per criterion.

Each test prints ``[ACCEPTANCE] <name>: PASS|FAIL`` (run with ``-s`` to see
the lines live) and enforces the criterion's stated tolerances and runtime
budget.
"""

import io
import json
import math
import re
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from softbody import dynamics, persistence
from softbody.cli import main
from softbody.mesh import build_two_layer_sphere
from softbody.model import (
    Dimension,
    DragHandle,
    ElasticObject,
    IntegratorKind,
    Layer,
    Spring,
    WorldParams,
    WorldState,
)
from softbody.scene import parse_scene
from softbody.session import Session, nearest_particle
from conftest import random_world, scene_dict, write_json

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def finish(name, failures, elapsed, budget):
    if elapsed > budget:
        failures.append(f"runtime {elapsed:.2f}s exceeded the {budget:.0f}s budget")
    status = "FAIL" if failures else "PASS"
    print(f"\n[ACCEPTANCE] {name}: {status} ({elapsed:.2f}s)")
    if failures:
        pytest.fail(f"{name}:\n" + "\n".join(f"  - {f}" for f in failures))


def run_cli(argv):
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(argv)
    return code, buffer.getvalue()


class TestAhpReproduction:
    def test_ahp_reproduction(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        started = time.perf_counter()
        failures = []

        code, out = run_cli([
            "ahp", str(DATA_DIR / "value_matrix.csv"), str(DATA_DIR / "cost_matrix.csv"),
        ])
        if code != 0:
            failures.append(f"cmd_ahp exited {code}")

        def parse_section(name):
            block = out.split(f"{name} priorities:")[1]
            weights = []
            for line in block.splitlines()[1:]:
                match = re.match(r"\s+\S+ ([0-9.]+)", line)
                if not match:
                    break
                weights.append(float(match.group(1)))
            return weights

        value = parse_section("value")
        cost = parse_section("cost")
        value_expected = [0.45, 0.23, 0.14, 0.02, 0.09, 0.05]
        cost_expected = [0.40, 0.22, 0.16, 0.02, 0.11, 0.06]
        for i, (got, want) in enumerate(zip(value, value_expected)):
            if abs(got - want) > 0.01:
                failures.append(f"value[{i}] = {got:.4f}, reference {want:.2f} (tolerance 0.01)")
        for i, (got, want) in enumerate(zip(cost, cost_expected)):
            if abs(got - want) > 0.01:
                failures.append(f"cost[{i}] = {got:.4f}, reference {want:.2f} (tolerance 0.01)")

        from softbody import ahp

        norm_value = ahp.normalize(ahp.load_matrix_csv(DATA_DIR / "value_matrix.csv"))
        norm_cost = ahp.normalize(ahp.load_matrix_csv(DATA_DIR / "cost_matrix.csv"))
        if abs(norm_value[0, 0] - 0.57) > 0.005:
            failures.append(f"value normalized corner {norm_value[0, 0]:.4f} != 0.57 +- 0.005")
        if abs(norm_cost[0, 0] - 0.56) > 0.005:
            failures.append(f"cost normalized corner {norm_cost[0, 0]:.4f} != 0.56 +- 0.005")

        finish("ahp-reproduction", failures, time.perf_counter() - started, budget=1.0)


class TestIntegratorOrders:
    @staticmethod
    def oscillator():
        obj = ElasticObject(
            Dimension.D1,
            positions=[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            masses=[1.0, 1.0],
            springs=[Spring(0, 1, 1.0, 0.0, 0.0)],
            fixed=[True, False],
        )
        world = WorldState(WorldParams(gravity=(0, 0, 0),
                                       bounds_min=(-1e3,) * 3, bounds_max=(1e3,) * 3))
        world.add_object(obj)
        return world

    def run_to(self, t_end, dt, kind):
        world = self.oscillator()
        steps = round(t_end / dt)
        for _ in range(steps):
            dynamics.step(world, dt, kind)
        remainder = t_end - steps * dt
        if remainder > 1e-12:
            dynamics.step(world, remainder, kind)
        return world.objects[0].positions[1, 0]

    def test_integrator_orders(self):
        started = time.perf_counter()
        failures = []

        brackets = {
            IntegratorKind.EULER: (1.7, 2.3),
            IntegratorKind.MIDPOINT: (3.4, 4.6),
            IntegratorKind.RK4: (13.0, 19.0),
        }
        for kind, (lo, hi) in brackets.items():
            coarse = abs(self.run_to(1.0, 0.05, kind) - math.cos(1.0))
            fine = abs(self.run_to(1.0, 0.025, kind) - math.cos(1.0))
            ratio = coarse / fine
            if not lo <= ratio <= hi:
                failures.append(f"{kind.value} halving ratio {ratio:.3f} outside [{lo}, {hi}]")

        period_error = abs(self.run_to(2.0 * math.pi, 0.01, IntegratorKind.RK4) - 1.0)
        if period_error > 1e-6:
            failures.append(f"RK4 period return error {period_error:.3e} > 1e-6")

        finish("integrator-orders", failures, time.perf_counter() - started, budget=5.0)


class TestConservationSuite:
    def test_conservation_suite(self):
        started = time.perf_counter()
        failures = []

        sphere = build_two_layer_sphere(1, 0.5, 0.6, 2.0, 50.0, 0.0, 1.2, 0.5)
        assert sphere.n_particles == 84
        rng = np.random.default_rng(2024)
        sphere.velocities[:] = rng.uniform(-0.5, 0.5, sphere.velocities.shape)
        world = WorldState(WorldParams(gravity=(0, 0, 0),
                                       bounds_min=(-1e3,) * 3, bounds_max=(1e3,) * 3))
        world.add_object(sphere)

        # closed-layer pressure zero-sum, relative to the per-face magnitudes
        breakdown = dynamics.total_force(world)
        pressure = breakdown.sources[dynamics.ForceSource.PRESSURE]
        per_face_total = 0.0
        for layer in (Layer.OUTER, Layer.INNER):
            faces = sphere.face_array(layer)
            volume = dynamics.enclosed_measure(sphere, layer)
            p = sphere.pressure[layer] / volume
            for a, b, c in faces:
                u = sphere.positions[b] - sphere.positions[a]
                v = sphere.positions[c] - sphere.positions[a]
                per_face_total += p * 0.5 * np.linalg.norm(np.cross(u, v))
        residual = np.linalg.norm(pressure.sum(axis=0))
        if residual > 1e-9 * per_face_total:
            failures.append(
                f"pressure sum {residual:.3e} > 1e-9 * {per_face_total:.3e}"
            )

        # momentum drift per step, 1000 steps, internal forces only
        worst = 0.0
        for _ in range(1000):
            before = (world._mass[:, None] * world._vel).sum(axis=0)
            scale = float((world._mass * np.linalg.norm(world._vel, axis=1)).sum())
            dynamics.step(world, 1.0 / 60.0, IntegratorKind.RK4)
            after = (world._mass[:, None] * world._vel).sum(axis=0)
            drift = float(np.linalg.norm(after - before)) / scale
            worst = max(worst, drift)
        if worst > 1e-9:
            failures.append(f"momentum drift {worst:.3e} > 1e-9 relative per step")

        finish("conservation-suite", failures, time.perf_counter() - started, budget=10.0)


class TestPersistenceRoundTrip:
    def test_persistence_round_trip(self):
        started = time.perf_counter()
        failures = []
        rng = np.random.default_rng(777)

        for case in range(200):
            frames = []
            n_frames = int(rng.integers(0, 4))
            n_objects = int(rng.integers(1, 3))
            counts = [int(rng.integers(1, 5)) for _ in range(n_objects)]
            t = 0.0
            for index in range(n_frames):
                t += float(rng.uniform(0.001, 0.5))
                objects = [
                    persistence.ObjectFrame(
                        oid,
                        rng.uniform(-10, 10, (count, 3)),
                        rng.uniform(-10, 10, (count, 3)),
                        rng.uniform(-10, 10, (count, 3)),
                        rng.uniform(0.01, 10, count),
                    )
                    for oid, count in enumerate(counts)
                ]
                markers = ["dimension_change:D2"] if rng.random() < 0.2 else []
                frames.append(persistence.FrameRecord(index, t, objects, markers))
            meta = persistence.RecordingMeta(
                created="2026-01-01T00:00:00Z",
                dt=float(rng.uniform(0.001, 0.1)),
                integrator=str(rng.choice(["euler", "midpoint", "rk4"])),
                scene_digest=f"{case:08x}",
            )
            recording = persistence.Recording(meta, frames)

            sink = io.BytesIO()
            persistence.write_xml(recording, sink)
            loaded = persistence.load_xml(io.BytesIO(sink.getvalue()))
            if loaded != recording:
                failures.append(f"case {case}: XML round-trip not identical")
                break

            csv_sink = io.StringIO()
            persistence.write_csv(recording, csv_sink)
            rows = csv_sink.getvalue().splitlines()[1:]
            numeric = {}
            for row in rows:
                parts = row.split(",")
                numeric[(int(parts[0]), int(parts[2]), int(parts[3]))] = [
                    float(x) for x in parts[4:]
                ] + [float(parts[1])]
            for frame in loaded.frames:
                for of in frame.objects:
                    for pid in range(of.positions.shape[0]):
                        expected = (
                            list(of.positions[pid]) + list(of.velocities[pid])
                            + list(of.forces[pid]) + [of.masses[pid], frame.t]
                        )
                        got = numeric[(frame.index, of.object_id, pid)]
                        if got != [float(v) for v in expected]:
                            failures.append(
                                f"case {case}: CSV payload differs at frame {frame.index}"
                            )
                            break

        finish("persistence-round-trip", failures, time.perf_counter() - started, budget=10.0)


class TestUseCaseScripts:
    """The seven scripted acceptance cases for dragging and saving."""

    @staticmethod
    def drag_scene(tmp_path):
        scene = scene_dict(
            object={"type": "two_layer_disc", "n_outer": 8, "r_outer": 0.5,
                    "inner_ratio": 0.6, "mass": 2.0, "stiffness": 150.0,
                    "damping": 1.0, "pressure": {"outer": 2.0, "inner": 0.8}},
            world={"gravity": [0.0, 0.0, 0.0],
                   "bounds": {"min": [-2.0, -2.0, -2.0], "max": [2.0, 2.0, 2.0]},
                   "restitution": 0.5},
        )
        return write_json(tmp_path / "drag_scene.json", scene)

    @staticmethod
    def centroid_x(state):
        xs = [p["px"] for p in state["objects"][0]["particles"]]
        return sum(xs) / len(xs)

    @staticmethod
    def gradual_moves(start, step, count, t0, spacing, y=0.0):
        return [
            {"at": t0 + spacing * i,
             "command": {"type": "drag_move", "x": start + step * i, "y": y, "z": 0.0}}
            for i in range(1, count + 1)
        ]

    def run_script(self, tmp_path, scene_path, script, steps, extra=()):
        script_path = write_json(tmp_path / "script.json", script)
        code, out = run_cli(["script", scene_path, script_path, "--steps", str(steps), *extra])
        state = json.loads(out) if out.strip().startswith("{") else None
        return code, state

    def test_use_case_scripts(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        started = time.perf_counter()
        failures = []
        scene_path = self.drag_scene(tmp_path)

        # drag main scenario: mouse drag to the right moves the body right
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.0, "command": {"type": "drag_start", "x": 0.5, "y": 0.0, "z": 0.0}},
            *self.gradual_moves(0.5, 0.05, 12, t0=0.0, spacing=0.05),
            {"at": 1.0, "command": {"type": "drag_end"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=90)
        if code != 0 or state is None:
            failures.append(f"drag main scenario: exit {code}")
        elif self.centroid_x(state) <= 0.02:
            failures.append(
                f"drag main scenario: centroid x {self.centroid_x(state):.4f} did not move right"
            )

        # drag via keyboard arrows: nudges displace the hold target
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.0, "command": {"type": "drag_start", "x": 0.5, "y": 0.0, "z": 0.0}},
            *[{"at": 0.02 * i, "command": {"type": "nudge", "dir": "right"}}
              for i in range(1, 31)],
            {"at": 1.2, "command": {"type": "drag_end"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=100)
        if code != 0 or state is None:
            failures.append(f"keyboard drag: exit {code}")
        elif self.centroid_x(state) <= 0.02:
            failures.append(
                f"keyboard drag: centroid x {self.centroid_x(state):.4f} did not follow arrows"
            )

        # drag to the view border, release: positions stay in bounds and
        # the system keeps updating the object
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.0, "command": {"type": "drag_start", "x": 0.5, "y": 0.0, "z": 0.0}},
            *self.gradual_moves(0.5, 0.05, 40, t0=0.0, spacing=0.03),  # runs past x=2
            {"at": 1.5, "command": {"type": "drag_end"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=150)
        if code != 0 or state is None:
            failures.append(f"border drag: exit {code}")
        else:
            for p in state["objects"][0]["particles"]:
                inside = all(-2.0 - 1e-9 <= p[k] <= 2.0 + 1e-9 for k in ("px", "py", "pz"))
                if not inside:
                    failures.append(f"border drag: particle {p['id']} escaped the view space")
                    break
            if state["clock"] < 150 / 60 - 1e-9:
                failures.append("border drag: clock did not keep advancing after release")
            if self.centroid_x(state) <= 0.02:
                failures.append("border drag: object did not move toward the border")

        # save, main scenario: default directory and default name
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.1, "command": {"type": "start_save"}},
            {"at": 0.6, "command": {"type": "stop_save"}},
            {"at": 0.7, "command": {"type": "save_confirm"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=60)
        if code != 0 or not state["saved_paths"]:
            failures.append("save main scenario: nothing saved")
        else:
            saved = Path(state["saved_paths"][0])
            if saved.parent != Path("recordings"):
                failures.append(f"save main scenario: saved outside the default dir: {saved}")
            if not re.fullmatch(r"simulation-\d{8}T\d{6}Z\.xml", saved.name):
                failures.append(f"save main scenario: unexpected default name {saved.name}")
            if not (tmp_path / saved).exists():
                failures.append("save main scenario: file missing on disk")

        # save with full memory: capture stops at capacity, the user is
        # notified, the prompt appears, and the partial dump is saveable
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.1, "command": {"type": "start_save"}},
            {"at": 1.2, "command": {"type": "save_confirm", "name": "partial"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=90,
                                      extra=["--capacity", "10"])
        events = [e["type"] for e in state["events"]] if state else []
        error_codes = [e.get("code") for e in state["events"]] if state else []
        if code != 0:
            failures.append(f"capacity scenario: exit {code}")
        elif "capacity_exceeded" not in error_codes:
            failures.append("capacity scenario: no capacity error surfaced")
        elif "save_prompt" not in events:
            failures.append("capacity scenario: prompt did not follow the error")
        else:
            partial = tmp_path / "recordings" / "partial.xml"
            if not partial.exists():
                failures.append("capacity scenario: partial dump not saved")
            elif len(persistence.load_xml(partial)) != 10:
                failures.append("capacity scenario: partial dump frame count != capacity")

        # save into a chosen directory (default name)
        chosen = tmp_path / "chosen-folder"
        chosen.mkdir()
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.1, "command": {"type": "start_save"}},
            {"at": 0.5, "command": {"type": "stop_save"}},
            {"at": 0.6, "command": {"type": "save_confirm", "dir": str(chosen)}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=60)
        if code != 0 or not state["saved_paths"]:
            failures.append("chosen directory scenario: nothing saved")
        else:
            saved = Path(state["saved_paths"][0])
            if saved.parent != chosen:
                failures.append(f"chosen directory scenario: saved to {saved.parent}")
            if not re.fullmatch(r"simulation-\d{8}T\d{6}Z\.xml", saved.name):
                failures.append("chosen directory scenario: name is not the default pattern")

        # save under a user-provided name (default directory)
        script = [
            {"at": 0.0, "command": {"type": "start"}},
            {"at": 0.1, "command": {"type": "start_save"}},
            {"at": 0.5, "command": {"type": "stop_save"}},
            {"at": 0.6, "command": {"type": "save_confirm", "name": "my-experiment"}},
        ]
        code, state = self.run_script(tmp_path, scene_path, script, steps=60)
        if code != 0 or not state["saved_paths"]:
            failures.append("chosen name scenario: nothing saved")
        else:
            saved = Path(state["saved_paths"][0])
            if saved.name != "my-experiment.xml":
                failures.append(f"chosen name scenario: saved as {saved.name}")
            if saved.parent != Path("recordings"):
                failures.append("chosen name scenario: not in the default directory")

        finish("use-case-scripts", failures, time.perf_counter() - started, budget=30.0)


class TestOracleEquivalence:
    def test_oracle_equivalence(self):
        started = time.perf_counter()
        failures = []

        # nearest particle against exhaustive search on 100 random worlds
        rng = np.random.default_rng(4242)
        for case in range(100):
            world = WorldState(WorldParams())
            for _ in range(int(rng.integers(1, 5))):
                n = int(rng.integers(1, 40))
                world.add_object(ElasticObject(Dimension.D3, rng.uniform(-2, 2, (n, 3)), 1.0))
            point = tuple(rng.uniform(-2, 2, 3))

            best = None
            for oid in sorted(world.objects):
                obj = world.objects[oid]
                for pid in range(obj.n_particles):
                    p = obj.positions[pid]
                    dx, dy, dz = p[0] - point[0], p[1] - point[1], p[2] - point[2]
                    key = (dx * dx + dy * dy + dz * dz, oid, pid)
                    if best is None or key < best:
                        best = key
            expected = (best[1], best[2], math.sqrt(best[0]))
            got = nearest_particle(world, point)
            if got != expected:
                failures.append(f"nearest particle mismatch on case {case}: {got} != {expected}")
                break

        # force breakdown total vs the plain accumulation pipeline
        rng = np.random.default_rng(31337)
        for case in range(25):
            world = random_world(rng, n_objects=int(rng.integers(1, 4)))
            first = min(world.objects)
            world.drag = DragHandle(object=first, particle=0,
                                    target=rng.uniform(-1, 1, 3))
            world.set_external_forces([(first, 0, tuple(rng.uniform(-1, 1, 3)))])
            total = dynamics.total_force(world).total.copy()
            dynamics.accumulate_forces(world)
            plain = world._force
            scale = max(1.0, float(np.abs(plain).max()))
            deviation = float(np.abs(total - plain).max())
            if deviation > 1e-12 * scale:
                failures.append(f"breakdown/pipeline deviation {deviation:.3e} on case {case}")
                break

        finish("oracle-equivalence", failures, time.perf_counter() - started, budget=30.0)


class TestDeskScalePerformance:
    def test_desk_scale_performance(self):
        started = time.perf_counter()
        failures = []

        # throughput proxy: the full pipeline at desk scale on a healthy,
        # freely jiggling body (no wall impacts involved)
        scene = parse_scene(scene_dict(
            dimension=3,
            object={"type": "two_layer_sphere", "depth": 2, "r_outer": 0.5,
                    "inner_ratio": 0.6, "mass": 2.0, "stiffness": 10.0,
                    "damping": 0.1, "pressure": {"outer": 1.0, "inner": 0.4}},
            world={"gravity": [0.0, 0.0, 0.0],
                   "bounds": {"min": [-2.0, -2.0, -2.0], "max": [2.0, 2.0, 2.0]},
                   "restitution": 0.5},
            integrator="rk4",
        ))
        session = Session(scene)
        total_particles = sum(o.n_particles for o in session.world.objects.values())
        total_springs = sum(len(o.springs) for o in session.world.objects.values())
        if total_particles != 324:
            failures.append(f"expected 324 particles, built {total_particles}")
        if not 1800 <= total_springs <= 2300:
            failures.append(f"expected ~2000 springs, built {total_springs}")

        for _ in range(30):  # warm-up
            session.tick()
        session.drain_events()
        ticks = 180
        t0 = time.perf_counter()
        for _ in range(ticks):
            session.tick()
        elapsed = time.perf_counter() - t0
        rate = ticks / elapsed
        blowups = [e for e in session.drain_events()
                   if getattr(e, "code", None) == "numerical_blowup"]
        if blowups:
            failures.append("simulation blew up during the measurement window")
        print(f"\n[ACCEPTANCE] desk-scale rate: {rate:.1f} ticks/s "
              f"({total_particles} particles, {total_springs} springs, rk4)")
        if rate < 60.0:
            failures.append(f"sustained only {rate:.1f} ticks/s (< 60)")

        finish("desk-scale-performance", failures, time.perf_counter() - started, budget=30.0)
