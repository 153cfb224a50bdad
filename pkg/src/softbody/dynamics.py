"""Force accumulation (six sources) and explicit time integration.

The derivative used by the integrators is the full force pipeline except
the positional boundary projection, which is applied exactly once per step
(a projection inside the stages would wreck the measured convergence
orders).  Inter-object penalty forces are position-dependent and live
inside the derivative.

Force sources, in accumulation order: gravity, spring (incl. links),
pressure, mouse drag, external, inter-object collision penalty.
"""

from __future__ import annotations

import enum
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    InvalidArgument,
    NumericalBlowup,
    OpenBoundary,
    StaleHandle,
    UnknownObject,
    UnknownParticle,
)
from .model import DragHandle, ElasticObject, IntegratorKind, Layer, WorldState

logger = logging.getLogger(__name__)

#: springs shorter than this contribute no force (degenerate geometry)
DEGENERATE_SPRING_LENGTH = 1e-9
#: a layer's pressure is capped once its measure falls below this fraction
#: of the build-time measure
COLLAPSE_FRACTION = 1e-6
#: coordinates beyond this multiple of the view extent abort the step
BLOWUP_EXTENT_FACTOR = 1e6
#: largest accepted integration step (s)
MAX_DT = 0.1


class ForceSource(enum.Enum):
    EXTERNAL = "external"
    GRAVITY = "gravity"
    MOUSE = "mouse"
    SPRING = "spring"
    PRESSURE = "pressure"
    COLLISION = "collision"


@dataclass
class ForceBreakdown:
    """Per-source force arrays plus their componentwise sum.

    ``total`` is the fold of the six source arrays in :class:`ForceSource`
    declaration order, so ``total == sum(sources)`` holds exactly.
    """

    sources: dict
    total: np.ndarray
    offsets: dict

    def source_at(self, source: ForceSource, object_id: int, particle_id: int) -> np.ndarray:
        return self.sources[source][self.offsets[object_id] + particle_id]

    def total_at(self, object_id: int, particle_id: int) -> np.ndarray:
        return self.total[self.offsets[object_id] + particle_id]


# ---------------------------------------------------------------------------
# flattened topology (cached per WorldState.topology_version)
# ---------------------------------------------------------------------------


@dataclass
class _PressureGroup:
    object_id: int
    layer: Layer
    faces: np.ndarray          # global indices, (F, 2) or (F, 3)
    nrt: float
    initial_measure: float
    triangles: bool


@dataclass
class _FlatTopology:
    version: int
    slices: list                 # (object_id, start, end)
    ia: np.ndarray
    ib: np.ndarray
    stiffness: np.ndarray
    damping: np.ndarray
    rest: np.ndarray
    groups: list
    degenerate_warned: bool = False
    collapsed_warned: set = field(default_factory=set)


def _measure_local(obj: ElasticObject, layer: Layer) -> float:
    faces = obj.face_array(layer)
    if faces.shape[1] == 2:
        return kernels.enclosed_area(obj.positions, faces)
    return kernels.enclosed_volume(obj.positions, faces)


def _validate_closed(obj: ElasticObject, layer: Layer) -> np.ndarray:
    """Check (once) that a layer's faces form a closed oriented boundary."""
    cached = obj._closed_layers.get(layer)
    if cached is not None:
        return obj.face_array(layer)
    faces = obj.face_array(layer)
    if faces.shape[0] == 0:
        raise OpenBoundary(f"layer {layer.value!r} has no faces")
    if faces.shape[1] == 2:
        tails = Counter(int(v) for v in faces[:, 0])
        heads = Counter(int(v) for v in faces[:, 1])
        if (set(tails) != set(heads)
                or any(c != 1 for c in tails.values())
                or any(c != 1 for c in heads.values())):
            raise OpenBoundary(f"layer {layer.value!r} edges do not form closed loops")
    else:
        directed = Counter()
        for a, b, c in faces.tolist():
            directed[(a, b)] += 1
            directed[(b, c)] += 1
            directed[(c, a)] += 1
        if any(count != 1 for count in directed.values()) or any(
            (b, a) not in directed for (a, b) in directed
        ):
            raise OpenBoundary(f"layer {layer.value!r} triangles do not form a closed shell")
    obj._closed_layers[layer] = True
    return faces


def enclosed_measure(obj: ElasticObject, layer: Layer) -> float:
    """Signed enclosed measure of one layer: area in 2D, volume in 3D.

    Positive for a consistently outward-oriented boundary; negative means
    the orientation is reversed.
    """
    _validate_closed(obj, layer)
    return _measure_local(obj, layer)


def _initial_measure(obj: ElasticObject, layer: Layer) -> float:
    value = obj._initial_measures.get(layer)
    if value is None:
        value = enclosed_measure(obj, layer)
        obj._initial_measures[layer] = value
    return value


def _flatten(world: WorldState) -> _FlatTopology:
    cached = getattr(world, "_flat_topology", None)
    if cached is not None and cached.version == world.topology_version:
        return cached

    slices = []
    ia_parts, ib_parts, k_parts, c_parts, rest_parts = [], [], [], [], []
    groups = []
    for oid, obj in world.objects.items():
        start = world.offset(oid)
        slices.append((oid, start, start + obj.n_particles))
        ia, ib, k, c, rest = obj.spring_arrays()
        ia_parts.append(ia + start)
        ib_parts.append(ib + start)
        k_parts.append(k)
        c_parts.append(c)
        rest_parts.append(rest)
        for layer in obj.layers():
            nrt = float(obj.pressure.get(layer, 0.0))
            if nrt <= 0.0:
                continue
            faces = _validate_closed(obj, layer)
            groups.append(
                _PressureGroup(
                    object_id=oid,
                    layer=layer,
                    faces=faces + start,
                    nrt=nrt,
                    initial_measure=_initial_measure(obj, layer),
                    triangles=faces.shape[1] == 3,
                )
            )
    for link in world.links:
        s = link.spring
        ia_parts.append(np.array([world.offset(link.object_a) + s.a], dtype=np.int64))
        ib_parts.append(np.array([world.offset(link.object_b) + s.b], dtype=np.int64))
        k_parts.append(np.array([s.stiffness]))
        c_parts.append(np.array([s.damping]))
        rest_parts.append(np.array([s.rest_length]))

    def cat(parts, dtype):
        if not parts:
            return np.zeros(0, dtype=dtype)
        return np.ascontiguousarray(np.concatenate(parts), dtype=dtype)

    flat = _FlatTopology(
        version=world.topology_version,
        slices=slices,
        ia=cat(ia_parts, np.int64),
        ib=cat(ib_parts, np.int64),
        stiffness=cat(k_parts, np.float64),
        damping=cat(c_parts, np.float64),
        rest=cat(rest_parts, np.float64),
        groups=groups,
    )
    world._flat_topology = flat
    return flat


# ---------------------------------------------------------------------------
# per-source accumulation (shared by the public ops, the pipeline and the
# integrator stages; pos/vel may be stage arrays rather than world state)
# ---------------------------------------------------------------------------


def _gravity_into(world: WorldState, out: np.ndarray) -> None:
    g = world.params.gravity
    if not g.any():
        return
    moving = ~world._fixed
    out[moving] += world._mass[moving, None] * g


def _springs_into(world, flat, pos, vel, out) -> None:
    degenerate = kernels.spring_forces(
        pos, vel, flat.ia, flat.ib, flat.stiffness, flat.damping, flat.rest,
        out, DEGENERATE_SPRING_LENGTH,
    )
    if degenerate:
        level = logging.DEBUG if flat.degenerate_warned else logging.WARNING
        logger.log(level, "%d degenerate spring(s) contributed no force", degenerate)
        flat.degenerate_warned = True


def _pressure_into(world, flat, pos, out) -> None:
    for group in flat.groups:
        if group.triangles:
            measure = kernels.enclosed_volume(pos, group.faces)
        else:
            measure = kernels.enclosed_area(pos, group.faces)
        floor = COLLAPSE_FRACTION * group.initial_measure
        if measure < floor:
            key = (group.object_id, group.layer)
            if key not in flat.collapsed_warned:
                logger.warning(
                    "layer %s of object %d collapsed (measure %.3g); pressure capped",
                    group.layer.value, group.object_id, measure,
                )
                flat.collapsed_warned.add(key)
            measure = floor
        pressure = group.nrt / measure
        if group.triangles:
            kernels.pressure_forces_3d(pos, group.faces, pressure, out)
        else:
            kernels.pressure_forces_2d(pos, group.faces, pressure, out)


def _drag_into(world, handle, pos, vel, out):
    """Accumulate the spring-damper mouse force; returns the force vector."""
    if handle is None or not handle.active:
        return None
    try:
        gi = world.global_index(handle.object, handle.particle)
    except (UnknownObject, UnknownParticle) as exc:
        raise StaleHandle(
            f"drag handle points at object {handle.object} particle {handle.particle}"
        ) from exc
    force = handle.k_drag * (handle.target - pos[gi]) - handle.c_drag * vel[gi]
    out[gi] += force
    return force


def _external_into(world, out) -> None:
    idx, vecs = world.external_arrays()
    if idx.shape[0]:
        np.add.at(out, idx, vecs)


def _collision_into(world, flat, pos, out) -> None:
    """Penalty forces between overlapping objects, mirrored pairwise."""
    stiffness = world.params.collision_stiffness
    if stiffness <= 0.0 or len(flat.slices) < 2:
        return
    spheres = []
    for oid, start, end in flat.slices:
        chunk = pos[start:end]
        center = chunk.mean(axis=0)
        radius = float(np.sqrt(((chunk - center) ** 2).sum(axis=1).max()))
        spheres.append((oid, start, end, center, radius))

    def push(sa, ea, center_b, radius_b, sb, eb):
        # particles of A inside B's bounding sphere get a radial penalty,
        # mirrored onto B's nearest particle (action-reaction)
        chunk = pos[sa:ea]
        delta = chunk - center_b
        dist = np.sqrt((delta**2).sum(axis=1))
        inside = dist < radius_b
        if not inside.any():
            return
        idx_a = np.nonzero(inside)[0]
        safe = np.maximum(dist[idx_a], 1e-12)
        direction = delta[idx_a] / safe[:, None]
        forces = stiffness * (radius_b - dist[idx_a])[:, None] * direction
        other = pos[sb:eb]
        for row, fvec in zip(idx_a, forces):
            out[sa + row] += fvec
            nearest = int(np.argmin(((other - pos[sa + row]) ** 2).sum(axis=1)))
            out[sb + nearest] -= fvec

    for (oa, sa, ea, ca, ra), (ob, sb, eb, cb, rb) in itertools.combinations(spheres, 2):
        if np.linalg.norm(cb - ca) >= ra + rb:
            continue
        push(sa, ea, cb, rb, sb, eb)
        push(sb, eb, ca, ra, sa, ea)


def _forces_into(world, flat, pos, vel, out):
    """Full pipeline (no boundary projection); returns the drag force."""
    _gravity_into(world, out)
    _springs_into(world, flat, pos, vel, out)
    _pressure_into(world, flat, pos, out)
    drag = _drag_into(world, world.drag, pos, vel, out)
    _external_into(world, out)
    _collision_into(world, flat, pos, out)
    return drag


# ---------------------------------------------------------------------------
# public force operations
# ---------------------------------------------------------------------------


def clear_forces(world: WorldState) -> None:
    world._force[:] = 0.0


def apply_gravity(world: WorldState) -> None:
    _gravity_into(world, world._force)


def apply_spring_forces(world: WorldState) -> None:
    _springs_into(world, _flatten(world), world._pos, world._vel, world._force)


def apply_pressure_forces(world: WorldState) -> None:
    _pressure_into(world, _flatten(world), world._pos, world._force)


def apply_drag_force(world: WorldState, handle: DragHandle) -> np.ndarray:
    """Apply the mouse spring-damper force; returns it for display."""
    force = _drag_into(world, handle, world._pos, world._vel, world._force)
    return np.zeros(3) if force is None else force


def apply_external_forces(world: WorldState, impulses) -> None:
    for object_id, particle_id, force in impulses:
        gi = world.global_index(object_id, particle_id)
        world._force[gi] += np.asarray(force, dtype=np.float64)


def resolve_collisions(world: WorldState) -> None:
    """Boundary projection/reflection plus inter-object penalty forces."""
    project_to_bounds(world)
    _collision_into(world, _flatten(world), world._pos, world._force)


def project_to_bounds(world: WorldState) -> None:
    """Clamp escaped particles to the box walls, reflecting the normal velocity."""
    pos, vel = world._pos, world._vel
    params = world.params
    movable = ~world._fixed
    for axis in range(3):
        lo, hi = params.bounds_min[axis], params.bounds_max[axis]
        below = (pos[:, axis] < lo) & movable
        if below.any():
            pos[below, axis] = lo
            outward = below & (vel[:, axis] < 0)
            vel[outward, axis] *= -params.restitution
        above = (pos[:, axis] > hi) & movable
        if above.any():
            pos[above, axis] = hi
            outward = above & (vel[:, axis] > 0)
            vel[outward, axis] *= -params.restitution


def accumulate_forces(world: WorldState):
    """Plain pipeline: clear, then accumulate all six sources in order.

    Returns the drag force vector (``None`` when no active handle) so the
    session can display its magnitude.
    """
    clear_forces(world)
    return _forces_into(world, _flatten(world), world._pos, world._vel, world._force)


def total_force(world: WorldState) -> ForceBreakdown:
    """Pipeline run with per-source bookkeeping.

    The world's accumulators are left holding the breakdown's total.
    """
    flat = _flatten(world)
    n = world.particle_count
    sources = {source: np.zeros((n, 3)) for source in ForceSource}
    _gravity_into(world, sources[ForceSource.GRAVITY])
    _springs_into(world, flat, world._pos, world._vel, sources[ForceSource.SPRING])
    _pressure_into(world, flat, world._pos, sources[ForceSource.PRESSURE])
    _drag_into(world, world.drag, world._pos, world._vel, sources[ForceSource.MOUSE])
    _external_into(world, sources[ForceSource.EXTERNAL])
    _collision_into(world, flat, world._pos, sources[ForceSource.COLLISION])
    total = np.zeros((n, 3))
    for source in ForceSource:
        total += sources[source]
    world._force[:] = total
    return ForceBreakdown(sources=sources, total=total, offsets=dict(world._offsets))


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def step(world: WorldState, dt: float, kind: IntegratorKind) -> None:
    """Advance positions and velocities by ``dt`` with the chosen scheme.

    On numerical blowup (non-finite state or coordinates beyond
    ``BLOWUP_EXTENT_FACTOR`` view extents) the world is left untouched and
    :class:`NumericalBlowup` is raised.
    """
    if not 0.0 < dt <= MAX_DT:
        raise InvalidArgument(f"dt must lie in (0, {MAX_DT}], got {dt}")
    if world.particle_count == 0:
        world.clock += dt
        return

    flat = _flatten(world)
    pos0 = world._pos.copy()
    vel0 = world._vel.copy()
    inv_mass = np.where(world._fixed, 0.0, 1.0 / world._mass)[:, None]

    def acceleration(pos, vel):
        out = np.zeros_like(pos0)
        _forces_into(world, flat, pos, vel, out)
        return out * inv_mass

    if kind is IntegratorKind.EULER:
        a1 = acceleration(pos0, vel0)
        pos1 = pos0 + dt * vel0
        vel1 = vel0 + dt * a1
    elif kind is IntegratorKind.MIDPOINT:
        a1 = acceleration(pos0, vel0)
        pm = pos0 + 0.5 * dt * vel0
        vm = vel0 + 0.5 * dt * a1
        a2 = acceleration(pm, vm)
        pos1 = pos0 + dt * vm
        vel1 = vel0 + dt * a2
    elif kind is IntegratorKind.RK4:
        k1v = acceleration(pos0, vel0)
        p2 = pos0 + 0.5 * dt * vel0
        v2 = vel0 + 0.5 * dt * k1v
        k2v = acceleration(p2, v2)
        p3 = pos0 + 0.5 * dt * v2
        v3 = vel0 + 0.5 * dt * k2v
        k3v = acceleration(p3, v3)
        p4 = pos0 + dt * v3
        v4 = vel0 + dt * k3v
        k4v = acceleration(p4, v4)
        pos1 = pos0 + (dt / 6.0) * (vel0 + 2.0 * v2 + 2.0 * v3 + v4)
        vel1 = vel0 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    else:
        raise InvalidArgument(f"unknown integrator {kind!r}")

    # the blowup guard covers every coordinate of the combined state
    limit = BLOWUP_EXTENT_FACTOR * world.params.extent
    if (
        not np.isfinite(pos1).all()
        or not np.isfinite(vel1).all()
        or np.abs(pos1).max() > limit
        or np.abs(vel1).max() > limit
    ):
        raise NumericalBlowup(
            f"step aborted at t={world.clock:.6g}s (dt={dt:g}, {kind.value}): "
            "state non-finite or outside the stability envelope"
        )

    fixed = world._fixed
    world._pos[:] = pos1
    world._vel[:] = vel1
    if fixed.any():
        world._pos[fixed] = pos0[fixed]
        world._vel[fixed] = vel0[fixed]
    world.clock += dt
