"""Numpy implementations of the per-triangle kernels.

These mirror ``_ckernels.pyx`` exactly and are used when the compiled module is
unavailable (or when ``CMCSTAB_PURE_PYTHON=1``).  ``lengths[t, k]`` is the length
of the edge of triangle ``t`` opposite its ``k``-th vertex.
"""

import numpy as np


def triangle_areas(lengths):
    l = np.sort(lengths, axis=1)[:, ::-1]
    a, b, c = l[:, 0], l[:, 1], l[:, 2]
    # Kahan's stable Heron formula, a >= b >= c
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def triangle_cotangents(lengths, areas):
    l2 = lengths**2
    out = np.empty_like(lengths)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        out[:, k] = (l2[:, i] + l2[:, j] - l2[:, k]) / (4.0 * areas)
    return out


def assemble_cotan(tri, lengths, nv):
    """COO triplets of the cotangent stiffness matrix plus lumped vertex masses."""
    tri = np.asarray(tri, dtype=np.int64)
    areas = triangle_areas(lengths)
    cot = triangle_cotangents(lengths, areas)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    mass = np.bincount(tri.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=nv)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), mass, areas


def alpha_sum(tri, lengths, rho):
    """Sum over faces of |grad rho|^2 / mean(rho)^2 times the face area."""
    tri = np.asarray(tri, dtype=np.int64)
    areas = triangle_areas(lengths)
    cot = triangle_cotangents(lengths, areas)
    r = rho[tri]
    energy = np.zeros(len(tri))
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        energy += 0.5 * cot[:, k] * (r[:, i] - r[:, j]) ** 2
    mean = r.mean(axis=1)
    return float(np.sum(energy / mean**2))


def angle_sums(tri, lengths, nv):
    tri = np.asarray(tri, dtype=np.int64)
    l2 = lengths**2
    ang = np.empty_like(lengths)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        cosk = (l2[:, i] + l2[:, j] - l2[:, k]) / (2.0 * lengths[:, i] * lengths[:, j])
        ang[:, k] = np.arccos(np.clip(cosk, -1.0, 1.0))
    return np.bincount(tri.ravel(), weights=ang.ravel(), minlength=nv)
