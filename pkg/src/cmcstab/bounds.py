"""Upper bounds for the first stability eigenvalue and equality classification.

Each theorem is keyed by the ambient kind.  The Berger sphere dispatches on the
sign of ``kappa - 4 tau^2``.  Strict bounds are reported with their margins but
never classified as equalities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .ambient import (
    BERGER,
    HEISENBERG,
    PRODUCT_H2R,
    PRODUCT_S2R,
    PRODUCT_S2S1,
    SL2,
    SPACE_FORM,
    sectional_lower_bound,
)
from .errors import NonConstantH, UnsupportedSpace

log = logging.getLogger(__name__)

THEOREM_IDS = (
    "T1_1_i", "T1_1_ii", "C1_2_i", "C1_2_ii",
    "S2R_i", "S2R_ii", "S2S1_i", "S2S1_ii", "H2R_i", "H2R_ii",
    "NIL_i", "NIL_ii", "SB_A_i", "SB_A_ii", "SB_B_i", "SB_B_ii", "SL2_i", "SL2_ii",
)
EQUALITY_CASES = ("none", "totally_umbilic_min_ricci", "hopf_torus", "horizontal_slice", "clifford_torus")

TOL_EQ = 1e-3
TOL_VERIFY = 0.02
GEOMETRY_TOL = 1e-6


@dataclass
class BoundReport:
    theorem_id: str
    bound_value: float
    lambda1: float
    margin: float
    strict: bool
    equality_case: str = "none"
    prediction: bool = False  # C1_2_i states an equality, not a bound
    passed: bool = True

    def to_dict(self):
        return asdict(self)


CSV_FIELDS = ("theorem_id", "bound", "lambda1", "margin", "strict", "equality_case")


def report_rows(reports):
    return [
        (r.theorem_id, r.bound_value, r.lambda1, r.margin, r.strict, r.equality_case) for r in reports
    ]


def _genus_term(g, area):
    if not area > 0:
        raise ValueError("area must be positive")
    return 8 * math.pi * (g - 1) / area


def bound_theorem_1_1(c, H, g, area):
    """Bounds valid whenever the sectional curvature is at least c."""
    b_i = -2 * (H * H + c)
    b_ii = -4 * (H * H + c) - _genus_term(g, area)
    return b_i, b_ii


def bound_homogeneous(space, H, g, area):
    """(theorem_id, bound, strict) triples of the E(kappa, tau) theorems for this kind."""
    k, t = space.kappa, space.tau
    H2, t2 = H * H, t * t
    gb = _genus_term(g, area)
    kind = space.kind
    if kind == PRODUCT_S2R:
        return [("S2R_i", -2 * H2, False), ("S2R_ii", -4 * H2 - k - gb, True)]
    if kind == PRODUCT_S2S1:
        return [("S2S1_i", -2 * H2, False), ("S2S1_ii", -4 * H2 - k - gb, False)]
    if kind == PRODUCT_H2R:
        return [("H2R_i", -2 * H2 - k, True), ("H2R_ii", -4 * H2 - 2 * k - gb, True)]
    if kind == HEISENBERG:
        return [("NIL_i", -2 * (H2 - t2), True), ("NIL_ii", -4 * (H2 - t2) - gb, True)]
    if kind == BERGER:
        if k - 4 * t2 > 0:
            return [("SB_A_i", -2 * (H2 + t2), True), ("SB_A_ii", -4 * H2 - k - gb, False)]
        return [
            ("SB_B_i", -2 * H2 - k + 2 * t2, True),
            ("SB_B_ii", -4 * H2 - 2 * k + 4 * t2 - gb, True),
        ]
    if kind == SL2:
        return [
            ("SL2_i", -2 * H2 - k + 2 * t2, True),
            ("SL2_ii", -4 * H2 - 2 * k + 4 * t2 - gb, True),
        ]
    raise UnsupportedSpace("space forms are covered by bound_theorem_1_1 / bound_space_form")


def _tol(tol, bound):
    return tol * (1.0 + abs(bound))


def bound_space_form(c, H, is_totally_umbilic, lambda1=float("nan"), genus=None, max_abs_K=None, tol_eq=TOL_EQ):
    """Dichotomy for space forms: umbilic surfaces have a predicted eigenvalue,
    all others satisfy the Clifford bound."""
    if is_totally_umbilic:
        pred = -2 * (H * H + c)
        margin = pred - lambda1
        eq = "totally_umbilic_min_ricci" if abs(margin) < _tol(tol_eq, pred) else "none"
        return BoundReport("C1_2_i", pred, lambda1, margin, False, eq, prediction=True)
    bound = -4 * (H * H + c)
    margin = bound - lambda1
    eq = "none"
    if (
        abs(margin) < _tol(tol_eq, bound)
        and genus == 1
        and max_abs_K is not None
        and max_abs_K < GEOMETRY_TOL
    ):
        eq = "clifford_torus"
    return BoundReport("C1_2_ii", bound, lambda1, margin, False, eq)


def all_bounds(space, H, g, area):
    """Every applicable (theorem_id, bound, strict), space-form type bounds first."""
    c = sectional_lower_bound(space)
    b_i, b_ii = bound_theorem_1_1(c, H, g, area)
    out = [("T1_1_i", b_i, False), ("T1_1_ii", b_ii, False)]
    if space.kind == SPACE_FORM:
        out.append(("C1_2_ii", -4 * (H * H + c), False))
    else:
        out += bound_homogeneous(space, H, g, area)
    return out


def sharpest_bound(mesh):
    H = float(np.mean(mesh.H))
    bounds = [b for tid, b, _ in all_bounds(mesh.space, H, mesh.genus, mesh.area)]
    if mesh.space.kind == SPACE_FORM and mesh.immersion.umbilic:
        bounds = [b for tid, b, _ in all_bounds(mesh.space, H, mesh.genus, mesh.area) if tid != "C1_2_ii"]
    return min(bounds)


def _geometry_flags(mesh, c):
    return {
        "umbilic": float(np.max(np.abs(mesh.phi_norm2))) < GEOMETRY_TOL,
        "min_ricci": float(np.max(np.abs(mesh.ric - 2 * c))) < GEOMETRY_TOL,
        "kbar_c": float(np.max(np.abs(mesh.kbar - c))) < GEOMETRY_TOL,
        "K_const": float(np.ptp(mesh.K)) < GEOMETRY_TOL * (1 + float(np.max(np.abs(mesh.K)))),
        "flat": float(np.max(np.abs(mesh.K))) < GEOMETRY_TOL,
        "hopf": mesh.space.is_homogeneous and float(np.max(np.abs(mesh.nxi))) < GEOMETRY_TOL and mesh.genus == 1,
        "slice": mesh.space.is_homogeneous and float(np.min(mesh.nxi**2)) > 1 - GEOMETRY_TOL,
    }


def _classify(theorem_id, strict, at_equality, flags, space):
    if strict or not at_equality:
        return "none"
    if theorem_id == "T1_1_i":
        return "totally_umbilic_min_ricci" if flags["umbilic"] and flags["min_ricci"] else "none"
    if theorem_id == "T1_1_ii":
        if not (flags["K_const"] and flags["kbar_c"] and flags["min_ricci"]):
            return "none"
        if flags["umbilic"]:
            return "totally_umbilic_min_ricci"
        if space.kind == SPACE_FORM and flags["flat"]:
            return "clifford_torus"
        return "none"
    if theorem_id in ("S2R_i", "S2S1_i"):
        return "horizontal_slice" if flags["slice"] else "none"
    if theorem_id in ("S2S1_ii", "SB_A_ii"):
        return "hopf_torus" if flags["hopf"] else "none"
    return "none"


def verify(mesh, spectrum, tol_eq=TOL_EQ, tol_verify=TOL_VERIFY):
    """Compare every applicable bound against the computed first eigenvalue."""
    if not mesh.is_cmc:
        raise NonConstantH("bounds apply to constant mean curvature surfaces only")
    lam = spectrum.lambda1 if hasattr(spectrum, "lambda1") else float(spectrum)
    space = mesh.space
    H = mesh.H_mean
    g, area = mesh.genus, mesh.area
    c = sectional_lower_bound(space)
    flags = _geometry_flags(mesh, c)
    reports = []
    for tid, bound, strict in all_bounds(space, H, g, area):
        if tid == "C1_2_ii":
            continue
        margin = bound - lam
        eq = _classify(tid, strict, abs(margin) < _tol(tol_eq, bound), flags, space)
        reports.append(BoundReport(tid, bound, lam, margin, strict, eq, passed=margin >= -_tol(tol_verify, bound)))
    if space.kind == SPACE_FORM:
        r = bound_space_form(
            c, H, flags["umbilic"], lam, genus=g, max_abs_K=float(np.max(np.abs(mesh.K))), tol_eq=tol_eq
        )
        tol = _tol(tol_verify, r.bound_value)
        r.passed = abs(r.margin) <= tol if r.prediction else r.margin >= -tol
        reports.append(r)
    if space.is_homogeneous and space.tau != 0:
        frac = vertical_normal_fraction(mesh)
        if frac > 0.1:
            log.warning("%.1f%% of the area has N nearly parallel to xi", 100 * frac)
    return reports


def all_passed(reports):
    return all(r.passed for r in reports)


def vertical_normal_fraction(mesh, eps=1e-3):
    """Area fraction where <N, xi>^2 > 1 - eps (expected negligible when tau != 0)."""
    mask = mesh.nxi**2 > 1 - eps
    return float(np.sum(mesh.mass[mask]) / np.sum(mesh.mass))


def stability_corollaries(space, H, g, area, lambda1, tol=1e-6, horizontal_slice=None):
    """Consistency of a computed lambda_1 with the strong-stability corollaries.

    A surface counts as strongly stable when ``lambda1 >= -tol``; a corollary
    forbidding stability is violated only when ``lambda1 > tol``.
    """
    H2 = H * H
    stable = lambda1 >= -tol
    surely_stable = lambda1 > tol
    checks = []

    def add(name, applicable, consistent):
        checks.append({"corollary": name, "applicable": bool(applicable), "consistent": bool(consistent)})

    c = sectional_lower_bound(space)
    s = H2 + c
    add("C1_3_i", s > tol, not surely_stable)
    add("C1_3_ii", abs(s) <= tol and stable, g <= 1)
    add("C1_3_iii", s < -tol and stable, area * abs(s) >= 2 * math.pi * (g - 1) - tol)
    k, t2 = space.kappa, space.tau**2
    if space.kind == PRODUCT_S2R:
        ok = horizontal_slice if horizontal_slice is not None else (abs(H) <= tol and g == 0)
        add("S2R_only_slices", stable, ok)
    elif space.kind == PRODUCT_H2R:
        add("H2R_i", H2 >= -k / 2, not surely_stable)
        add("H2R_ii", H2 < -k / 2 and stable, area * abs(2 * H2 + k) > 4 * math.pi * (g - 1) - tol)
    elif space.kind == HEISENBERG:
        add("NIL_i", H2 >= t2, not surely_stable)
        add("NIL_ii", H2 < t2 and stable, area * abs(H2 - t2) > 2 * math.pi * (g - 1) - tol)
    elif space.kind == SL2:
        add("SL2_i", H2 >= t2 - k / 2, not surely_stable)
        add("SL2_ii", H2 < t2 - k / 2 and stable, area * abs(H2 - t2 + k / 2) > 2 * math.pi * (g - 1) - tol)
    elif space.kind == BERGER:
        add("BERGER_none_stable", True, not surely_stable)
    return checks
