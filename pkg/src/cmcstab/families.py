"""Built-in CMC families with closed-form first eigenvalues, plus mesh-ladder helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ambient import AmbientSpace
from .config import SURFACE_CONSTRUCTORS
from .errors import ConfigError
from .surface import build_mesh, clifford_torus, hopf_torus, round_sphere, slice_sphere

ROUND_OFF = 1e-10
SPACE_KEYS = {"kappa", "tau", "c"}


def make_immersion(space, constructor, params):
    params = dict(params)
    if constructor == "round_sphere":
        return round_sphere(space, radius=params.get("radius"), H=params.get("H"))
    if constructor == "clifford_torus":
        if space.kind != "SpaceForm":
            raise ConfigError("clifford_torus needs a SpaceForm", "surface.constructor")
        return clifford_torus(space.c, params.get("H", 0.0))
    if constructor == "hopf_torus":
        return hopf_torus(space, params.get("c_gamma", 0.0))
    if constructor == "slice_sphere":
        return slice_sphere(space, params.get("t", 0.0))
    raise ConfigError(f"unknown constructor {constructor!r}", "surface.constructor")


def expected_lambda1(imm):
    """Closed-form first eigenvalue of a built-in CMC surface, or None."""
    space = imm.space
    if imm.name == "round_sphere":
        H = imm.info["H"]
        return -2 * (H * H + space.c)
    if imm.name == "clifford_torus":
        H = imm.info["H"]
        return -4 * (H * H + space.c)
    if imm.name == "hopf_torus":
        H = imm.info["c_gamma"] / 2
        return -4 * H * H - space.kappa
    if imm.name == "slice_sphere":
        return 0.0
    return None


@dataclass(frozen=True)
class Family:
    name: str
    space: dict
    constructor: str
    params: dict
    ladder: tuple

    def check_overrides(self, keys):
        allowed = SURFACE_CONSTRUCTORS[self.constructor][1] | SPACE_KEYS
        unknown = set(keys) - allowed
        if unknown:
            raise ConfigError(f"{self.constructor} does not take {sorted(unknown)}", f"family.{self.name}")

    def build(self, **overrides):
        self.check_overrides(overrides)
        space_d = dict(self.space)
        params = dict(self.params)
        for key, value in overrides.items():
            if key in SPACE_KEYS:
                space_d[key] = value
            else:
                params[key] = value
        space = AmbientSpace.from_dict(space_d)
        return make_immersion(space, self.constructor, params)


TWO_PI = 2 * math.pi

FAMILIES = {
    "great_sphere": Family("great_sphere", {"kind": "SpaceForm", "c": 1.0}, "round_sphere", {}, ((2,), (3,), (4,))),
    "clifford": Family(
        "clifford", {"kind": "SpaceForm", "c": 1.0}, "clifford_torus", {"H": 0.0}, ((24, 24), (48, 48), (96, 96))
    ),
    "hopf_s2s1": Family(
        "hopf_s2s1",
        {"kind": "ProductS2S1", "kappa": 1.0, "tau": 0.0, "circle_length": TWO_PI},
        "hopf_torus",
        {"c_gamma": 1.0},
        ((24, 24), (48, 48), (96, 96)),
    ),
    "hopf_berger": Family(
        "hopf_berger",
        {"kind": "BergerSphere", "kappa": 4.0, "tau": 0.9},
        "hopf_torus",
        {"c_gamma": 0.0},
        ((24, 24), (48, 48), (96, 96)),
    ),
    "slice": Family(
        "slice", {"kind": "ProductS2R", "kappa": 1.0, "tau": 0.0}, "slice_sphere", {"t": 0.0}, ((2,), (3,), (4,))
    ),
}
DEFAULT_SUITE = ("great_sphere", "clifford", "hopf_s2s1", "hopf_berger", "slice")


def mesh_size(mesh):
    return float(np.mean(mesh.lengths))


def fitted_order(h, err):
    """Least-squares slope of log(err) against log(h)."""
    h, err = np.asarray(h, dtype=float), np.asarray(err, dtype=float)
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def convergence_order(h, values, exact=None, floor=ROUND_OFF):
    """Observed order of a refinement ladder.

    With ``exact`` the errors are measured directly; otherwise successive
    differences are used (self-convergence).  Returns ``(order, exact_to_rounding)``;
    when every error is below ``floor`` the discretization reproduces the value
    to rounding and ``order`` is ``inf``.
    """
    values = np.asarray(values, dtype=float)
    h = np.asarray(h, dtype=float)
    if exact is not None:
        err = np.abs(values - exact)
        scale = 1 + abs(exact)
    else:
        err = np.abs(np.diff(values))
        h = h[1:]
        scale = 1 + float(np.max(np.abs(values)))
    if np.all(err <= floor * scale):
        return math.inf, True
    if len(err) < 2 or np.any(err <= 0):
        return math.nan, False
    return fitted_order(h, err), False


def ladder_meshes(imm, ladder):
    return [build_mesh(imm, res) for res in ladder]
