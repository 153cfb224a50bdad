"""NumPy fallback implementations of the hot force/measure kernels.

Signature-compatible with the compiled backend in ``_core``; selected at
import time by :mod:`softbody.kernels`.
"""

import numpy as np

NAME = "pure"


def spring_forces(pos, vel, ia, ib, stiffness, damping, rest, out, min_length):
    """Accumulate Hooke + axial-damping forces for all springs into ``out``.

    For spring (a, b): d = p_b - p_a, s = k*(|d| - rest) + c*((v_b - v_a).dhat);
    ``out[a] += s*dhat`` and ``out[b] -= s*dhat``.  Springs shorter than
    ``min_length`` contribute nothing; their count is returned.
    """
    if ia.shape[0] == 0:
        return 0
    d = pos[ib] - pos[ia]
    length = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2 + d[:, 2] ** 2)
    degenerate = length < min_length
    safe = np.where(degenerate, 1.0, length)
    dhat = d / safe[:, None]
    rel = vel[ib] - vel[ia]
    scalar = stiffness * (length - rest) + damping * (
        rel[:, 0] * dhat[:, 0] + rel[:, 1] * dhat[:, 1] + rel[:, 2] * dhat[:, 2]
    )
    scalar[degenerate] = 0.0
    f = scalar[:, None] * dhat
    np.add.at(out, ia, f)
    np.add.at(out, ib, -f)
    return int(degenerate.sum())


def enclosed_area(pos, edges):
    """Signed polygon area of a closed, consistently oriented edge set."""
    a = pos[edges[:, 0]]
    b = pos[edges[:, 1]]
    return float(0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))


def enclosed_volume(pos, tris):
    """Signed volume of a closed triangle surface (divergence theorem)."""
    a = pos[tris[:, 0]]
    b = pos[tris[:, 1]]
    c = pos[tris[:, 2]]
    cross = np.cross(a, b)
    return float(np.sum(cross * c) / 6.0)


def pressure_forces_2d(pos, edges, pressure, out):
    """Accumulate ``P * length * outward_normal`` per edge, half per vertex.

    Outward normal of edge (a, b) in a counterclockwise loop is
    ``(dy, -dx) / |d|``, so the un-normalised force is ``P * (dy, -dx, 0)``.
    """
    a = edges[:, 0]
    b = edges[:, 1]
    d = pos[b] - pos[a]
    half = np.zeros((edges.shape[0], 3))
    half[:, 0] = 0.5 * pressure * d[:, 1]
    half[:, 1] = -0.5 * pressure * d[:, 0]
    np.add.at(out, a, half)
    np.add.at(out, b, half)


def pressure_forces_3d(pos, tris, pressure, out):
    """Accumulate ``P * area_vector`` per triangle, one third per vertex."""
    ia = tris[:, 0]
    ib = tris[:, 1]
    ic = tris[:, 2]
    u = pos[ib] - pos[ia]
    v = pos[ic] - pos[ia]
    area_vec = 0.5 * np.cross(u, v)
    third = (pressure / 3.0) * area_vec
    np.add.at(out, ia, third)
    np.add.at(out, ib, third)
    np.add.at(out, ic, third)
