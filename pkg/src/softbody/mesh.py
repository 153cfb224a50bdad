"""Constructors for 1D/2D/3D elastic objects and inter-object links.

All builders are deterministic pure functions: identical arguments yield
identical objects.  Every spring's rest length is the endpoint distance at
build time; closed layers are oriented so their enclosed measure is
positive.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgument, SelfLink, UnknownParticle
from .model import (
    Dimension,
    ElasticObject,
    Face,
    Layer,
    LinkSpring,
    Spring,
    WorldState,
)

MAX_SUBDIVISION_DEPTH = 5


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise InvalidArgument(f"{name} must be positive, got {value!r}")


def _require_non_negative(**values):
    for name, value in values.items():
        if value < 0:
            raise InvalidArgument(f"{name} must be non-negative, got {value!r}")


def _spring(positions, a, b, stiffness, damping) -> Spring:
    rest = float(np.linalg.norm(positions[b] - positions[a]))
    return Spring(a, b, stiffness, damping, rest)


def build_chain(n: int, length: float, mass: float, stiffness: float, damping: float) -> ElasticObject:
    """Horizontal chain of ``n`` particles joined by ``n - 1`` springs."""
    if n < 2:
        raise InvalidArgument(f"a chain needs at least 2 particles, got {n}")
    _require_positive(length=length, mass=mass)
    _require_non_negative(stiffness=stiffness, damping=damping)

    xs = np.linspace(-length / 2.0, length / 2.0, n)
    positions = np.zeros((n, 3))
    positions[:, 0] = xs
    springs = [_spring(positions, i, i + 1, stiffness, damping) for i in range(n - 1)]
    return ElasticObject(Dimension.D1, positions, mass / n, springs=springs)


def build_two_layer_disc(
    n_outer: int,
    r_outer: float,
    inner_ratio: float,
    mass: float,
    stiffness: float,
    damping: float,
    nrt_outer: float,
    nrt_inner: float,
) -> ElasticObject:
    """Two concentric rings cross-linked by radial and diagonal springs.

    Ring ``i`` particles sit at angle ``2*pi*i/n`` (counterclockwise,
    particle 0 on the +x axis); outer ring indices ``0..n-1``, inner ring
    ``n..2n-1``.
    """
    if n_outer < 3:
        raise InvalidArgument(f"a ring needs at least 3 particles, got {n_outer}")
    _require_positive(r_outer=r_outer, mass=mass)
    if not 0.0 < inner_ratio < 1.0:
        raise InvalidArgument(f"inner_ratio must lie in (0, 1), got {inner_ratio}")
    _require_non_negative(stiffness=stiffness, damping=damping,
                          nrt_outer=nrt_outer, nrt_inner=nrt_inner)

    n = n_outer
    angles = 2.0 * math.pi * np.arange(n) / n
    ring = np.stack([np.cos(angles), np.sin(angles), np.zeros(n)], axis=1)
    positions = np.concatenate([ring * r_outer, ring * (inner_ratio * r_outer)])

    springs = []
    for i in range(n):
        j = (i + 1) % n
        springs.append(_spring(positions, i, j, stiffness, damping))            # outer ring
    for i in range(n):
        j = (i + 1) % n
        springs.append(_spring(positions, n + i, n + j, stiffness, damping))    # inner ring
    for i in range(n):
        springs.append(_spring(positions, i, n + i, stiffness, damping))        # radial spokes
    for i in range(n):
        j = (i + 1) % n
        springs.append(_spring(positions, i, n + j, stiffness, damping))        # cross diagonals
        springs.append(_spring(positions, j, n + i, stiffness, damping))

    faces = [Face((i, (i + 1) % n), Layer.OUTER) for i in range(n)]
    faces += [Face((n + i, n + (i + 1) % n), Layer.INNER) for i in range(n)]

    return ElasticObject(
        Dimension.D2,
        positions,
        mass / (2 * n),
        springs=springs,
        faces=faces,
        pressure={Layer.OUTER: nrt_outer, Layer.INNER: nrt_inner},
    )


def _icosahedron():
    """Unit icosahedron with outward (counterclockwise from outside) faces."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
            (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
            (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    return verts, tris


def subdivide_icosphere(depth: int):
    """Icosahedron subdivided ``depth`` times, vertices on the unit sphere.

    Each pass splits every triangle into four; edge midpoints are shared
    between neighbouring triangles.  Returns ``(vertices, triangles)`` as
    an ``(V, 3)`` float array and an ``(F, 3)`` int array.
    """
    if depth < 0:
        raise InvalidArgument(f"depth must be non-negative, got {depth}")
    if depth > MAX_SUBDIVISION_DEPTH:
        raise InvalidArgument(
            f"depth {depth} exceeds the maximum of {MAX_SUBDIVISION_DEPTH}"
        )

    verts, tris = _icosahedron()
    verts = [v for v in verts]
    for _ in range(depth):
        midpoint: dict = {}

        def midpoint_index(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        next_tris = []
        for a, b, c in tris:
            ab = midpoint_index(a, b)
            bc = midpoint_index(b, c)
            ca = midpoint_index(c, a)
            next_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = np.array(next_tris, dtype=np.int64)

    return np.array(verts), tris


def mesh_edges(tris: np.ndarray) -> np.ndarray:
    """Unique undirected edges of a triangle mesh, sorted for determinism."""
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    return np.unique(edges, axis=0)


def build_two_layer_sphere(
    depth: int,
    r_outer: float,
    inner_ratio: float,
    mass: float,
    stiffness: float,
    damping: float,
    nrt_outer: float,
    nrt_inner: float,
) -> ElasticObject:
    """Two concentric icosphere shells cross-linked along every mesh edge.

    Outer shell occupies indices ``0..V-1``, inner shell ``V..2V-1`` with
    the same mesh connectivity.  Springs: both shells' edges, radial pairs
    ``i <-> V+i``, and for every edge ``(i, j)`` the two crossed links
    ``i <-> V+j`` and ``j <-> V+i``.
    """
    _require_positive(r_outer=r_outer, mass=mass)
    if not 0.0 < inner_ratio < 1.0:
        raise InvalidArgument(f"inner_ratio must lie in (0, 1), got {inner_ratio}")
    _require_non_negative(stiffness=stiffness, damping=damping,
                          nrt_outer=nrt_outer, nrt_inner=nrt_inner)

    verts, tris = subdivide_icosphere(depth)
    v = verts.shape[0]
    positions = np.concatenate([verts * r_outer, verts * (inner_ratio * r_outer)])

    springs = []
    edges = mesh_edges(tris)
    for i, j in edges:
        springs.append(_spring(positions, int(i), int(j), stiffness, damping))
    for i, j in edges:
        springs.append(_spring(positions, v + int(i), v + int(j), stiffness, damping))
    for i in range(v):
        springs.append(_spring(positions, i, v + i, stiffness, damping))
    for i, j in edges:
        springs.append(_spring(positions, int(i), v + int(j), stiffness, damping))
        springs.append(_spring(positions, int(j), v + int(i), stiffness, damping))

    faces = [Face(tuple(tri), Layer.OUTER) for tri in tris.tolist()]
    faces += [Face((a + v, b + v, c + v), Layer.INNER) for a, b, c in tris.tolist()]

    return ElasticObject(
        Dimension.D3,
        positions,
        mass / (2 * v),
        springs=springs,
        faces=faces,
        pressure={Layer.OUTER: nrt_outer, Layer.INNER: nrt_inner},
    )


def link_objects(
    world: WorldState,
    object_a: int,
    particle_a: int,
    object_b: int,
    particle_b: int,
    stiffness: float,
    damping: float,
) -> int:
    """Attach two objects with a spring; rest length is the current gap."""
    if object_a == object_b:
        raise SelfLink(f"cannot link object {object_a} to itself")
    _require_non_negative(stiffness=stiffness, damping=damping)
    pa = world.object(object_a).positions
    pb = world.object(object_b).positions
    if not 0 <= particle_a < pa.shape[0]:
        raise UnknownParticle(f"object {object_a} has no particle {particle_a}")
    if not 0 <= particle_b < pb.shape[0]:
        raise UnknownParticle(f"object {object_b} has no particle {particle_b}")
    rest = float(np.linalg.norm(pb[particle_b] - pa[particle_a]))
    link = LinkSpring(object_a, object_b, Spring(particle_a, particle_b, stiffness, damping, rest))
    return world.add_link(link)
