import math

import numpy as np
import oracles
import pytest
import scipy.sparse as sps

from cmcstab import _pykernels, kernels

BACKENDS = kernels.backends()


def _random_mesh_data(rng, nf=200, nv=120):
    tri = rng.integers(0, nv, (nf, 3)).astype(np.int64)
    tri = tri[(tri[:, 0] != tri[:, 1]) & (tri[:, 1] != tri[:, 2]) & (tri[:, 0] != tri[:, 2])]
    # valid triangles: lengths from random planar points
    P = rng.standard_normal((len(tri), 3, 2))
    lengths = np.stack([np.linalg.norm(P[:, (k + 1) % 3] - P[:, (k + 2) % 3], axis=1) for k in range(3)], axis=1)
    return tri, lengths, nv


def test_compiled_backend_is_selected_when_built():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_areas_match_cross_product(name):
    rng = np.random.default_rng(0)
    P = rng.standard_normal((50, 3, 3))
    lengths = np.stack([np.linalg.norm(P[:, (k + 1) % 3] - P[:, (k + 2) % 3], axis=1) for k in range(3)], axis=1)
    exact = 0.5 * np.linalg.norm(np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=1)
    np.testing.assert_allclose(BACKENDS[name].triangle_areas(np.ascontiguousarray(lengths)), exact, rtol=1e-12)


def test_needle_triangle_area_is_stable():
    # naive Heron loses every digit here
    eps = 1e-9
    lengths = np.array([[1.0, 1.0, eps]])
    for mod in BACKENDS.values():
        assert mod.triangle_areas(lengths)[0] == pytest.approx(0.5 * eps, rel=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_assembly_matches_planar_p1_oracle(name):
    rng = np.random.default_rng(1)
    tri, lengths, nv = _random_mesh_data(rng)
    rows, cols, vals, mass, areas = BACKENDS[name].assemble_cotan(tri, np.ascontiguousarray(lengths), nv)
    L = sps.coo_matrix((vals, (rows, cols)), shape=(nv, nv)).toarray()
    K, m = oracles.stiffness_and_mass(tri, lengths, nv)
    np.testing.assert_allclose(L, K, atol=1e-10 * np.abs(K).max())
    # the planar layout in the oracle loses a few digits on slivers
    np.testing.assert_allclose(mass, m, rtol=1e-10)
    np.testing.assert_allclose(L @ np.ones(nv), 0, atol=1e-10 * np.abs(K).max())


def test_backends_agree():
    rng = np.random.default_rng(2)
    tri, lengths, nv = _random_mesh_data(rng, nf=500, nv=300)
    lengths = np.ascontiguousarray(lengths)
    rho = rng.uniform(0.5, 2.0, nv)
    ref = _pykernels
    for mod in BACKENDS.values():
        a = mod.triangle_areas(lengths)
        np.testing.assert_allclose(a, ref.triangle_areas(lengths), rtol=1e-14)
        np.testing.assert_allclose(mod.triangle_cotangents(lengths, a), ref.triangle_cotangents(lengths, a), rtol=1e-12)
        got = mod.assemble_cotan(tri, lengths, nv)
        exp = ref.assemble_cotan(tri, lengths, nv)
        Lg = sps.coo_matrix((got[2], (got[0], got[1])), shape=(nv, nv)).toarray()
        Le = sps.coo_matrix((exp[2], (exp[0], exp[1])), shape=(nv, nv)).toarray()
        np.testing.assert_allclose(Lg, Le, atol=1e-12 * np.abs(Le).max())
        np.testing.assert_allclose(got[3], exp[3], rtol=1e-13)
        assert float(mod.alpha_sum(tri, lengths, rho)) == pytest.approx(ref.alpha_sum(tri, lengths, rho), rel=1e-12)
        np.testing.assert_allclose(mod.angle_sums(tri, lengths, nv), ref.angle_sums(tri, lengths, nv), rtol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_equilateral_cotangents_and_angles(name):
    mod = BACKENDS[name]
    lengths = np.ones((1, 3))
    a = mod.triangle_areas(lengths)
    np.testing.assert_allclose(mod.triangle_cotangents(lengths, a), 1 / math.sqrt(3), rtol=1e-14)
    tri = np.array([[0, 1, 2]], dtype=np.int64)
    np.testing.assert_allclose(mod.angle_sums(tri, lengths, 3), math.pi / 3, rtol=1e-14)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_alpha_sum_of_constant_and_scaling(name):
    rng = np.random.default_rng(3)
    tri, lengths, nv = _random_mesh_data(rng)
    lengths = np.ascontiguousarray(lengths)
    mod = BACKENDS[name]
    assert mod.alpha_sum(tri, lengths, np.full(nv, 3.0)) == 0.0
    rho = rng.uniform(0.5, 2.0, nv)
    assert mod.alpha_sum(tri, lengths, 2 * rho) == pytest.approx(mod.alpha_sum(tri, lengths, rho), rel=1e-12)


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, CMCSTAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from cmcstab import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
