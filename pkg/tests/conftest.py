import functools

import pytest

from cmcstab import families as fam
from cmcstab.ambient import AmbientSpace
from cmcstab.spectrum import solve
from cmcstab.surface import (
    build_mesh,
    clifford_torus,
    hopf_torus,
    round_sphere,
    slice_sphere,
)

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running convergence ladders")


def record_criterion(number, passed, detail):
    """Register one acceptance line; printed immediately and again in the session summary."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


@functools.cache
def cached_mesh(key, resolution):
    """Meshes shared across test modules; ``key`` names a built-in surface."""
    return build_mesh(surface_by_key(key), resolution)


@functools.cache
def cached_solve(key, resolution, k=5):
    mesh = cached_mesh(key, resolution)
    op, res = solve(mesh, k=k)
    return mesh, op, res


def surface_by_key(key):
    name, _, arg = key.partition(":")
    if name in fam.FAMILIES and not arg:
        return fam.FAMILIES[name].build()
    if name == "clifford":
        return clifford_torus(1.0, float(arg))
    if name == "hopf_s2s1":
        return hopf_torus(AmbientSpace("ProductS2S1", kappa=1.0, circle_length=6.283185307179586), float(arg))
    if name == "hopf_berger":
        return hopf_torus(AmbientSpace("BergerSphere", kappa=4.0, tau=0.9), float(arg))
    if name == "euclid_sphere":
        return round_sphere(AmbientSpace.space_form(0.0), radius=float(arg))
    if name == "slice_s2s1":
        return slice_sphere(AmbientSpace("ProductS2S1", kappa=1.0, circle_length=3.0), float(arg or 0))
    raise KeyError(key)


@pytest.fixture(scope="session")
def great_sphere_l3():
    return cached_solve("great_sphere", (3,))
