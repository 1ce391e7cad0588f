# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-triangle kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, acos

cnp.import_array()


cdef inline double _heron(double x, double y, double z) noexcept nogil:
    cdef double a = x, b = y, c = z, t, prod
    if a < b:
        t = a; a = b; b = t
    if b < c:
        t = b; b = c; c = t
    if a < b:
        t = a; a = b; b = t
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if prod < 0.0:
        prod = 0.0
    return 0.25 * sqrt(prod)


def triangle_areas(double[:, ::1] lengths):
    cdef Py_ssize_t m = lengths.shape[0], t
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for t in range(m):
            o[t] = _heron(lengths[t, 0], lengths[t, 1], lengths[t, 2])
    return out


def triangle_cotangents(double[:, ::1] lengths, double[::1] areas):
    cdef Py_ssize_t m = lengths.shape[0], t, k, i, j
    out = np.empty((m, 3))
    cdef double[:, ::1] o = out
    with nogil:
        for t in range(m):
            for k in range(3):
                i = (k + 1) % 3
                j = (k + 2) % 3
                o[t, k] = (lengths[t, i] * lengths[t, i] + lengths[t, j] * lengths[t, j]
                           - lengths[t, k] * lengths[t, k]) / (4.0 * areas[t])
    return out


def assemble_cotan(tri, double[:, ::1] lengths, Py_ssize_t nv):
    cdef cnp.int64_t[:, ::1] T = np.ascontiguousarray(tri, dtype=np.int64)
    cdef Py_ssize_t m = T.shape[0], t, k, e, vi, vj
    rows_a = np.empty(12 * m, dtype=np.int64)
    cols_a = np.empty(12 * m, dtype=np.int64)
    vals_a = np.empty(12 * m)
    mass_a = np.zeros(nv)
    areas_a = np.empty(m)
    cdef cnp.int64_t[::1] rows = rows_a, cols = cols_a
    cdef double[::1] vals = vals_a, mass = mass_a, areas = areas_a
    cdef double A, w, l2i, l2j, l2k
    with nogil:
        for t in range(m):
            A = _heron(lengths[t, 0], lengths[t, 1], lengths[t, 2])
            areas[t] = A
            for k in range(3):
                vi = T[t, (k + 1) % 3]
                vj = T[t, (k + 2) % 3]
                l2i = lengths[t, (k + 1) % 3] * lengths[t, (k + 1) % 3]
                l2j = lengths[t, (k + 2) % 3] * lengths[t, (k + 2) % 3]
                l2k = lengths[t, k] * lengths[t, k]
                w = 0.5 * (l2i + l2j - l2k) / (4.0 * A)
                e = 12 * t + 4 * k
                rows[e] = vi; cols[e] = vj; vals[e] = -w
                rows[e + 1] = vj; cols[e + 1] = vi; vals[e + 1] = -w
                rows[e + 2] = vi; cols[e + 2] = vi; vals[e + 2] = w
                rows[e + 3] = vj; cols[e + 3] = vj; vals[e + 3] = w
                mass[T[t, k]] += A / 3.0
    return rows_a, cols_a, vals_a, mass_a, areas_a


def alpha_sum(tri, double[:, ::1] lengths, double[::1] rho):
    cdef cnp.int64_t[:, ::1] T = np.ascontiguousarray(tri, dtype=np.int64)
    cdef Py_ssize_t m = T.shape[0], t, k, i, j
    cdef double A, energy, mean, d, cot, total = 0.0
    with nogil:
        for t in range(m):
            A = _heron(lengths[t, 0], lengths[t, 1], lengths[t, 2])
            energy = 0.0
            for k in range(3):
                i = (k + 1) % 3
                j = (k + 2) % 3
                cot = (lengths[t, i] * lengths[t, i] + lengths[t, j] * lengths[t, j]
                       - lengths[t, k] * lengths[t, k]) / (4.0 * A)
                d = rho[T[t, i]] - rho[T[t, j]]
                energy += 0.5 * cot * d * d
            mean = (rho[T[t, 0]] + rho[T[t, 1]] + rho[T[t, 2]]) / 3.0
            total += energy / (mean * mean)
    return total


def angle_sums(tri, double[:, ::1] lengths, Py_ssize_t nv):
    cdef cnp.int64_t[:, ::1] T = np.ascontiguousarray(tri, dtype=np.int64)
    cdef Py_ssize_t m = T.shape[0], t, k, i, j
    out = np.zeros(nv)
    cdef double[::1] o = out
    cdef double c
    with nogil:
        for t in range(m):
            for k in range(3):
                i = (k + 1) % 3
                j = (k + 2) % 3
                c = (lengths[t, i] * lengths[t, i] + lengths[t, j] * lengths[t, j]
                     - lengths[t, k] * lengths[t, k]) / (2.0 * lengths[t, i] * lengths[t, j])
                if c > 1.0:
                    c = 1.0
                elif c < -1.0:
                    c = -1.0
                o[T[t, k]] += acos(c)
    return out
