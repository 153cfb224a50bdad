# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled force/measure kernels (hot inner loops of the simulation).

Mirrors the NumPy fallback in ``pure.py``; see there for the contracts.
"""

from libc.math cimport sqrt

NAME = "compiled"


def spring_forces(double[:, ::1] pos, double[:, ::1] vel,
                  long long[::1] ia, long long[::1] ib,
                  double[::1] stiffness, double[::1] damping, double[::1] rest,
                  double[:, ::1] out, double min_length):
    cdef Py_ssize_t m = ia.shape[0]
    cdef Py_ssize_t s, a, b
    cdef double dx, dy, dz, length, nx, ny, nz, rel, scalar, fx, fy, fz
    cdef int degenerate = 0
    for s in range(m):
        a = ia[s]
        b = ib[s]
        dx = pos[b, 0] - pos[a, 0]
        dy = pos[b, 1] - pos[a, 1]
        dz = pos[b, 2] - pos[a, 2]
        length = sqrt(dx * dx + dy * dy + dz * dz)
        if length < min_length:
            degenerate += 1
            continue
        nx = dx / length
        ny = dy / length
        nz = dz / length
        rel = ((vel[b, 0] - vel[a, 0]) * nx
               + (vel[b, 1] - vel[a, 1]) * ny
               + (vel[b, 2] - vel[a, 2]) * nz)
        scalar = stiffness[s] * (length - rest[s]) + damping[s] * rel
        fx = scalar * nx
        fy = scalar * ny
        fz = scalar * nz
        out[a, 0] += fx
        out[a, 1] += fy
        out[a, 2] += fz
        out[b, 0] -= fx
        out[b, 1] -= fy
        out[b, 2] -= fz
    return degenerate


def enclosed_area(double[:, ::1] pos, long long[:, ::1] edges):
    cdef Py_ssize_t m = edges.shape[0]
    cdef Py_ssize_t e, a, b
    cdef double total = 0.0
    for e in range(m):
        a = edges[e, 0]
        b = edges[e, 1]
        total += pos[a, 0] * pos[b, 1] - pos[b, 0] * pos[a, 1]
    return 0.5 * total


def enclosed_volume(double[:, ::1] pos, long long[:, ::1] tris):
    cdef Py_ssize_t m = tris.shape[0]
    cdef Py_ssize_t t, a, b, c
    cdef double cx, cy, cz, total = 0.0
    for t in range(m):
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        cx = pos[a, 1] * pos[b, 2] - pos[a, 2] * pos[b, 1]
        cy = pos[a, 2] * pos[b, 0] - pos[a, 0] * pos[b, 2]
        cz = pos[a, 0] * pos[b, 1] - pos[a, 1] * pos[b, 0]
        total += cx * pos[c, 0] + cy * pos[c, 1] + cz * pos[c, 2]
    return total / 6.0


def pressure_forces_2d(double[:, ::1] pos, long long[:, ::1] edges,
                       double pressure, double[:, ::1] out):
    cdef Py_ssize_t m = edges.shape[0]
    cdef Py_ssize_t e, a, b
    cdef double dx, dy, hx, hy
    for e in range(m):
        a = edges[e, 0]
        b = edges[e, 1]
        dx = pos[b, 0] - pos[a, 0]
        dy = pos[b, 1] - pos[a, 1]
        hx = 0.5 * pressure * dy
        hy = -0.5 * pressure * dx
        out[a, 0] += hx
        out[a, 1] += hy
        out[b, 0] += hx
        out[b, 1] += hy


def pressure_forces_3d(double[:, ::1] pos, long long[:, ::1] tris,
                       double pressure, double[:, ::1] out):
    cdef Py_ssize_t m = tris.shape[0]
    cdef Py_ssize_t t, a, b, c
    cdef double ux, uy, uz, vx, vy, vz, tx, ty, tz, scale
    scale = pressure / 6.0  # 0.5 (area vector) * 1/3 (per-vertex share)
    for t in range(m):
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        ux = pos[b, 0] - pos[a, 0]
        uy = pos[b, 1] - pos[a, 1]
        uz = pos[b, 2] - pos[a, 2]
        vx = pos[c, 0] - pos[a, 0]
        vy = pos[c, 1] - pos[a, 1]
        vz = pos[c, 2] - pos[a, 2]
        tx = scale * (uy * vz - uz * vy)
        ty = scale * (uz * vx - ux * vz)
        tz = scale * (ux * vy - uy * vx)
        out[a, 0] += tx
        out[a, 1] += ty
        out[a, 2] += tz
        out[b, 0] += tx
        out[b, 1] += ty
        out[b, 2] += tz
        out[c, 0] += tx
        out[c, 1] += ty
        out[c, 2] += tz
