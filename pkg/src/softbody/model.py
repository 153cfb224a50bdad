"""Core data model: particles, springs, faces, elastic objects and the world.

Vectors are ``numpy`` arrays of shape ``(3,)`` (float64).  An
:class:`ElasticObject` stores its particle state as struct-of-arrays;
:class:`Particle` is a lightweight row view used by construction code and
tests.  When an object is added to a :class:`WorldState` its arrays are
rebound to slices of the world's contiguous storage, so the dynamics
kernels operate on flat arrays with no per-step gather/scatter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument, SelfLink, UnknownObject, UnknownParticle


def vec3(x=0.0, y=0.0, z=0.0) -> np.ndarray:
    """Build a float64 world-coordinate vector; accepts a 3-sequence as ``x``."""
    if np.ndim(x) != 0:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (3,):
            raise InvalidArgument(f"expected 3 components, got shape {arr.shape}")
        return arr.copy()
    return np.array([x, y, z], dtype=np.float64)


class Dimension(enum.Enum):
    D1 = 1
    D2 = 2
    D3 = 3


class Layer(enum.Enum):
    OUTER = "outer"
    INNER = "inner"


class IntegratorKind(enum.Enum):
    EULER = "euler"
    MIDPOINT = "midpoint"
    RK4 = "rk4"


@dataclass
class Spring:
    """Elastic element between two particles of one object.

    ``rest_length`` is fixed at construction to the endpoint distance.
    """

    a: int
    b: int
    stiffness: float
    damping: float
    rest_length: float

    def __post_init__(self):
        # a == b is rejected by ElasticObject, not here: inside a LinkSpring
        # the two ids index different objects and may legitimately coincide.
        if self.stiffness < 0 or self.damping < 0 or self.rest_length < 0:
            raise InvalidArgument("spring coefficients must be non-negative")


@dataclass(frozen=True)
class Face:
    """Oriented boundary element: 2 vertex ids in 2D, 3 in 3D."""

    vertices: tuple
    layer: Layer

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) not in (2, 3):
            raise InvalidArgument("faces carry 2 (edge) or 3 (triangle) vertices")
        if len(set(verts)) != len(verts):
            raise InvalidArgument("face vertices must be distinct")


class Particle:
    """View of one particle row inside an :class:`ElasticObject`."""

    __slots__ = ("_obj", "_index")

    def __init__(self, obj: "ElasticObject", index: int):
        self._obj = obj
        self._index = index

    @property
    def id(self) -> int:
        return self._index

    @property
    def position(self) -> np.ndarray:
        return self._obj.positions[self._index]

    @position.setter
    def position(self, value):
        self._obj.positions[self._index] = vec3(value)

    @property
    def velocity(self) -> np.ndarray:
        return self._obj.velocities[self._index]

    @velocity.setter
    def velocity(self, value):
        self._obj.velocities[self._index] = vec3(value)

    @property
    def force(self) -> np.ndarray:
        """Force accumulator for the current step."""
        return self._obj.forces[self._index]

    @property
    def mass(self) -> float:
        return float(self._obj.masses[self._index])

    @mass.setter
    def mass(self, value: float):
        if value <= 0:
            raise InvalidArgument("mass must be positive")
        self._obj.masses[self._index] = value

    @property
    def fixed(self) -> bool:
        return bool(self._obj.fixed[self._index])

    @fixed.setter
    def fixed(self, value: bool):
        self._obj.fixed[self._index] = bool(value)
        if value:
            # pinned particles carry no velocity
            self._obj.velocities[self._index] = 0.0

    def __repr__(self):
        p = self.position
        return f"Particle(id={self._index}, position=({p[0]:g}, {p[1]:g}, {p[2]:g}))"


class ElasticObject:
    """One deformable body: particle state arrays plus spring/face topology.

    Topology (springs, faces, pressure parameters) is treated as immutable
    after construction; particle state mutates freely.
    """

    def __init__(
        self,
        dimension: Dimension,
        positions,
        masses,
        velocities=None,
        springs: Sequence[Spring] = (),
        faces: Sequence[Face] = (),
        pressure: Optional[dict] = None,
        fixed=None,
        object_id: Optional[int] = None,
    ):
        pos = np.array(positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] == 0:
            raise InvalidArgument("positions must be a non-empty (n, 3) array")
        if not np.isfinite(pos).all():
            raise InvalidArgument("positions must be finite")
        n = pos.shape[0]

        mass_arr = np.broadcast_to(np.asarray(masses, dtype=np.float64), (n,)).copy()
        if not (mass_arr > 0).all():
            raise InvalidArgument("particle masses must be positive")

        if velocities is None:
            vel = np.zeros((n, 3), dtype=np.float64)
        else:
            vel = np.array(velocities, dtype=np.float64)
            if vel.shape != (n, 3) or not np.isfinite(vel).all():
                raise InvalidArgument("velocities must be finite and shaped (n, 3)")

        fixed_arr = np.zeros(n, dtype=bool)
        if fixed is not None:
            fixed_arr[:] = np.asarray(fixed, dtype=bool)
        vel[fixed_arr] = 0.0

        self.id = object_id
        self.dimension = dimension
        self.positions = pos
        self.velocities = vel
        self.forces = np.zeros((n, 3), dtype=np.float64)
        self.masses = mass_arr
        self.fixed = fixed_arr
        self.springs = list(springs)
        self.faces = list(faces)
        self.pressure = dict(pressure or {})

        for s in self.springs:
            if s.a == s.b:
                raise InvalidArgument("spring endpoints must differ within an object")
            if not (0 <= s.a < n and 0 <= s.b < n):
                raise UnknownParticle(f"spring ({s.a}, {s.b}) references a missing particle")
        for f in self.faces:
            for v in f.vertices:
                if not 0 <= v < n:
                    raise UnknownParticle(f"face {f.vertices} references a missing particle")
        for layer, value in self.pressure.items():
            if not isinstance(layer, Layer):
                raise InvalidArgument("pressure keys must be Layer members")
            if value < 0:
                raise InvalidArgument("pressure strength (nRT) must be non-negative")
        if dimension is Dimension.D1 and (self.faces or any(self.pressure.values())):
            raise InvalidArgument("1D objects carry no faces and no pressure")

        self._spring_arrays = None
        self._face_arrays: dict = {}
        self._closed_layers: dict = {}
        self._initial_measures: dict = {}

    # -- derived views -------------------------------------------------

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    def particle(self, index: int) -> Particle:
        if not 0 <= index < self.n_particles:
            raise UnknownParticle(f"object has no particle {index}")
        return Particle(self, index)

    @property
    def particles(self):
        return [Particle(self, i) for i in range(self.n_particles)]

    def spring_arrays(self):
        """Spring topology as packed arrays ``(ia, ib, k, c, rest)``."""
        if self._spring_arrays is None:
            m = len(self.springs)
            ia = np.fromiter((s.a for s in self.springs), dtype=np.int64, count=m)
            ib = np.fromiter((s.b for s in self.springs), dtype=np.int64, count=m)
            k = np.fromiter((s.stiffness for s in self.springs), dtype=np.float64, count=m)
            c = np.fromiter((s.damping for s in self.springs), dtype=np.float64, count=m)
            rest = np.fromiter((s.rest_length for s in self.springs), dtype=np.float64, count=m)
            self._spring_arrays = (ia, ib, k, c, rest)
        return self._spring_arrays

    def spring_pairs(self) -> np.ndarray:
        """Spring endpoints as an immutable ``(m, 2)`` index array."""
        if not hasattr(self, "_spring_pairs"):
            ia, ib, *_ = self.spring_arrays()
            pairs = np.stack([ia, ib], axis=1) if ia.shape[0] else np.zeros((0, 2), dtype=np.int64)
            pairs.setflags(write=False)
            self._spring_pairs = pairs
        return self._spring_pairs

    def layers(self):
        return sorted({f.layer for f in self.faces}, key=lambda l: l.value)

    def face_array(self, layer: Layer) -> np.ndarray:
        """Faces of one layer as an ``(n_faces, 2|3)`` int64 index array."""
        if layer not in self._face_arrays:
            faces = [f.vertices for f in self.faces if f.layer is layer]
            if not faces:
                self._face_arrays[layer] = np.zeros((0, 2), dtype=np.int64)
            else:
                arity = {len(v) for v in faces}
                if len(arity) != 1:
                    raise InvalidArgument(f"layer {layer} mixes edge and triangle faces")
                self._face_arrays[layer] = np.array(faces, dtype=np.int64)
        return self._face_arrays[layer]

    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def clone(self) -> "ElasticObject":
        obj = ElasticObject(
            self.dimension,
            self.positions.copy(),
            self.masses.copy(),
            velocities=self.velocities.copy(),
            springs=[Spring(s.a, s.b, s.stiffness, s.damping, s.rest_length) for s in self.springs],
            faces=list(self.faces),
            pressure=dict(self.pressure),
            fixed=self.fixed.copy(),
            object_id=self.id,
        )
        obj.forces[:] = self.forces
        obj._initial_measures = dict(self._initial_measures)
        return obj

    def _rebind(self, pos, vel, force, mass, fixed):
        """Point the state arrays at world-owned storage slices."""
        self.positions = pos
        self.velocities = vel
        self.forces = force
        self.masses = mass
        self.fixed = fixed


@dataclass
class LinkSpring:
    """Spring joining particles of two different objects.

    ``spring.a`` indexes into ``object_a``; ``spring.b`` into ``object_b``.
    """

    object_a: int
    object_b: int
    spring: Spring

    def __post_init__(self):
        if self.object_a == self.object_b:
            raise SelfLink("links join two distinct objects")


@dataclass
class WorldParams:
    """Global world parameters: gravity, view-space box, collision response."""

    gravity: np.ndarray = field(default_factory=lambda: vec3(0.0, -9.81, 0.0))
    bounds_min: np.ndarray = field(default_factory=lambda: vec3(-2.0, -2.0, -2.0))
    bounds_max: np.ndarray = field(default_factory=lambda: vec3(2.0, 2.0, 2.0))
    restitution: float = 0.5
    collision_stiffness: float = 500.0

    def __post_init__(self):
        self.gravity = vec3(self.gravity)
        self.bounds_min = vec3(self.bounds_min)
        self.bounds_max = vec3(self.bounds_max)
        if not (self.bounds_min < self.bounds_max).all():
            raise InvalidArgument("bounds_min must be componentwise below bounds_max")
        if not 0.0 <= self.restitution <= 1.0:
            raise InvalidArgument("restitution must lie in [0, 1]")
        if self.collision_stiffness < 0:
            raise InvalidArgument("collision_stiffness must be non-negative")

    @property
    def extent(self) -> float:
        """Largest box edge; the 'view extent' used for UI-relative sizes."""
        return float((self.bounds_max - self.bounds_min).max())

    def clamp(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.bounds_min, self.bounds_max)

    def copy(self) -> "WorldParams":
        return WorldParams(
            self.gravity.copy(),
            self.bounds_min.copy(),
            self.bounds_max.copy(),
            self.restitution,
            self.collision_stiffness,
        )


@dataclass
class DragHandle:
    """Live mouse/keyboard force attachment to one particle."""

    object: int
    particle: int
    target: np.ndarray
    k_drag: float = 50.0
    c_drag: float = 2.0
    active: bool = True


class WorldState:
    """All objects, links and parameters plus the simulation clock.

    Particle state lives in contiguous world-level arrays; each object's
    arrays are views into them.  ``topology_version`` bumps whenever the
    set of particles/springs changes so dynamics can cache flattened
    topology.
    """

    def __init__(self, params: Optional[WorldParams] = None):
        self.params = params if params is not None else WorldParams()
        self.objects: dict[int, ElasticObject] = {}
        self.links: list[LinkSpring] = []
        self.clock = 0.0
        self.drag: Optional[DragHandle] = None
        self.topology_version = 0

        n = 0
        self._pos = np.zeros((n, 3))
        self._vel = np.zeros((n, 3))
        self._force = np.zeros((n, 3))
        self._mass = np.zeros(n)
        self._fixed = np.zeros(n, dtype=bool)
        self._offsets: dict[int, int] = {}

        self._external: list = []
        self._external_arrays = None

    # -- storage management --------------------------------------------

    def add_object(self, obj: ElasticObject) -> int:
        """Adopt ``obj`` into world storage; returns its object id."""
        if obj.id is not None and obj.id in self.objects:
            raise InvalidArgument(f"object id {obj.id} already present")
        oid = obj.id if obj.id is not None else (max(self.objects, default=-1) + 1)
        obj.id = oid
        self.objects[oid] = obj
        self._rebuild_storage()
        self.topology_version += 1
        return oid

    def _rebuild_storage(self):
        sizes = [o.n_particles for o in self.objects.values()]
        total = int(sum(sizes))
        pos = np.zeros((total, 3))
        vel = np.zeros((total, 3))
        force = np.zeros((total, 3))
        mass = np.zeros(total)
        fixed = np.zeros(total, dtype=bool)
        self._offsets = {}
        start = 0
        for oid, obj in self.objects.items():
            end = start + obj.n_particles
            pos[start:end] = obj.positions
            vel[start:end] = obj.velocities
            force[start:end] = obj.forces
            mass[start:end] = obj.masses
            fixed[start:end] = obj.fixed
            obj._rebind(pos[start:end], vel[start:end], force[start:end], mass[start:end], fixed[start:end])
            self._offsets[oid] = start
            start = end
        self._pos, self._vel, self._force = pos, vel, force
        self._mass, self._fixed = mass, fixed
        self._external_arrays = None  # offsets may have shifted

    # -- lookup ----------------------------------------------------------

    def object(self, object_id: int) -> ElasticObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise UnknownObject(f"no object with id {object_id}") from None

    def global_index(self, object_id: int, particle_id: int) -> int:
        obj = self.object(object_id)
        if not 0 <= particle_id < obj.n_particles:
            raise UnknownParticle(f"object {object_id} has no particle {particle_id}")
        return self._offsets[object_id] + particle_id

    def offset(self, object_id: int) -> int:
        self.object(object_id)
        return self._offsets[object_id]

    @property
    def particle_count(self) -> int:
        return self._pos.shape[0]

    def add_link(self, link: LinkSpring) -> int:
        self.object(link.object_a)
        self.object(link.object_b)
        self.global_index(link.object_a, link.spring.a)
        self.global_index(link.object_b, link.spring.b)
        self.links.append(link)
        self.topology_version += 1
        return len(self.links) - 1

    # -- standing external forces (steering, scripted pushes) ------------

    def set_external_forces(self, items: Iterable) -> None:
        """Replace the external forces applied during every force evaluation.

        Each item is ``(object_id, particle_id, force_vec)``.
        """
        resolved = [(int(o), int(p), vec3(f)) for o, p, f in items]
        for o, p, _ in resolved:
            self.global_index(o, p)
        self._external = resolved
        self._external_arrays = None

    @property
    def external_forces(self) -> list:
        return list(self._external)

    def external_arrays(self):
        """Standing external forces as ``(global_indices, vectors)`` arrays."""
        if self._external_arrays is None:
            idx = np.fromiter(
                (self.global_index(o, p) for o, p, _ in self._external),
                dtype=np.int64,
                count=len(self._external),
            )
            vecs = (
                np.array([f for _, _, f in self._external], dtype=np.float64)
                if self._external
                else np.zeros((0, 3))
            )
            self._external_arrays = (idx, vecs)
        return self._external_arrays

    # -- copying ----------------------------------------------------------

    def copy(self) -> "WorldState":
        """Deep copy (independent storage); used for oracle runs and tests."""
        other = WorldState(self.params.copy())
        for oid, obj in self.objects.items():
            other.objects[oid] = obj.clone()
        other._rebuild_storage()
        other.links = [
            LinkSpring(l.object_a, l.object_b,
                       Spring(l.spring.a, l.spring.b, l.spring.stiffness,
                              l.spring.damping, l.spring.rest_length))
            for l in self.links
        ]
        other.clock = self.clock
        other.topology_version = self.topology_version
        if self.drag is not None:
            d = self.drag
            other.drag = DragHandle(d.object, d.particle, d.target.copy(), d.k_drag, d.c_drag, d.active)
        other.set_external_forces(self._external)
        return other
