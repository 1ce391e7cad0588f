import logging
import math

import pytest
from conftest import cached_solve

from cmcstab import bounds as bnd
from cmcstab.ambient import AmbientSpace
from cmcstab.errors import NonConstantH, UnsupportedSpace
from cmcstab.spectrum import solve
from cmcstab.surface import build_mesh, clifford_torus, perturbed

FOUR_PI = 4 * math.pi


def _by_id(reports):
    return {r.theorem_id: r for r in reports}


# -- bound formulas ----------------------------------------------------------------


@pytest.mark.parametrize(
    "c, H, g, area, b_i, b_ii",
    [
        (1.0, 0.0, 0, FOUR_PI, -2.0, -2.0),
        (1.0, 0.0, 1, 7.0, -2.0, -4.0),
        (0.0, 1.0, 0, FOUR_PI, -2.0, -2.0),
        (-1.0, 2.0, 2, 8 * math.pi, -6.0, -12.0 - 1.0),
    ],
)
def test_theorem_one_bounds(c, H, g, area, b_i, b_ii):
    got = bnd.bound_theorem_1_1(c, H, g, area)
    assert got == pytest.approx((b_i, b_ii))


def _homog(space, H, g, area):
    return {tid: (b, strict) for tid, b, strict in bnd.bound_homogeneous(space, H, g, area)}


def test_product_bounds():
    b = _homog(AmbientSpace("ProductS2S1", kappa=1.0, circle_length=1.0), 0.5, 1, 3.0)
    assert b["S2S1_i"] == (pytest.approx(-0.5), False)
    assert b["S2S1_ii"] == (pytest.approx(-2.0), False)
    b = _homog(AmbientSpace("ProductS2R", kappa=2.0), 0.0, 0, FOUR_PI)
    assert b["S2R_i"] == (0.0, False)
    assert b["S2R_ii"] == (pytest.approx(-2.0 + 2.0), True)


def test_hyperbolic_product_bounds():
    # kappa = -1, H = 1, g = 2, area = 4 pi: (i) -2 + 1, (ii) -4 + 2 - 8 pi / (4 pi)
    b = _homog(AmbientSpace("ProductH2R", kappa=-1.0), 1.0, 2, FOUR_PI)
    assert b["H2R_i"] == (pytest.approx(-1.0), True)
    assert b["H2R_ii"] == (pytest.approx(-4.0), True)


def test_heisenberg_bounds():
    b = _homog(AmbientSpace("Heisenberg", tau=0.5), 0.0, 0, 10.0)
    assert b["NIL_i"] == (pytest.approx(0.5), True)
    # (ii): -4 (0 - 1/4) + 8 pi / 10
    assert b["NIL_ii"] == (pytest.approx(1.0 + 0.8 * math.pi), True)


def test_berger_dispatch_on_sign():
    a = _homog(AmbientSpace("BergerSphere", kappa=4.0, tau=0.9), 0.0, 1, 5.0)
    assert set(a) == {"SB_A_i", "SB_A_ii"}
    assert a["SB_A_i"] == (pytest.approx(-2 * 0.81), True)
    assert a["SB_A_ii"] == (pytest.approx(-4.0), False)
    b = _homog(AmbientSpace("BergerSphere", kappa=1.0, tau=1.0), 0.5, 0, FOUR_PI)
    assert set(b) == {"SB_B_i", "SB_B_ii"}
    # (i): -0.5 - 1 + 2 ; (ii): -1 - 2 + 4 + 2
    assert b["SB_B_i"] == (pytest.approx(0.5), True)
    assert b["SB_B_ii"] == (pytest.approx(3.0), True)


def test_sl2_bounds():
    b = _homog(AmbientSpace("Sl2Universal", kappa=-1.0, tau=0.5), 0.5, 1, 2.0)
    # (i): -0.5 + 1 + 0.5 ; (ii): -1 + 2 + 1 - 0
    assert b["SL2_i"] == (pytest.approx(1.0), True)
    assert b["SL2_ii"] == (pytest.approx(2.0), True)


def test_space_form_rejected_by_homogeneous_dispatch():
    with pytest.raises(UnsupportedSpace):
        bnd.bound_homogeneous(AmbientSpace.space_form(1.0), 0, 0, 1.0)


def test_space_form_dichotomy():
    r = bnd.bound_space_form(1.0, 0.0, True, lambda1=-2.0)
    assert r.prediction and r.bound_value == -2.0 and r.equality_case == "totally_umbilic_min_ricci"
    r = bnd.bound_space_form(1.0, 0.0, False, lambda1=-4.0, genus=1, max_abs_K=0.0)
    assert r.theorem_id == "C1_2_ii" and r.equality_case == "clifford_torus"
    r = bnd.bound_space_form(-1.0, math.sqrt(2), True)
    assert r.bound_value == pytest.approx(-2.0)
    r = bnd.bound_space_form(1.0, 0.0, False, lambda1=-4.0, genus=0, max_abs_K=0.0)
    assert r.equality_case == "none"


def test_area_must_be_positive():
    with pytest.raises(ValueError):
        bnd.bound_theorem_1_1(1.0, 0.0, 1, 0.0)


# -- verification on computed spectra --------------------------------------------------


def test_great_sphere_equality():
    mesh, _, res = cached_solve("great_sphere", (3,))
    reps = _by_id(bnd.verify(mesh, res))
    assert reps["T1_1_i"].equality_case == "totally_umbilic_min_ricci"
    assert reps["C1_2_i"].prediction and reps["C1_2_i"].passed
    assert bnd.all_passed(reps.values())


def test_clifford_equality():
    mesh, _, res = cached_solve("clifford", (48, 48))
    reps = _by_id(bnd.verify(mesh, res))
    assert reps["C1_2_ii"].equality_case == "clifford_torus"
    assert reps["T1_1_ii"].equality_case == "clifford_torus"
    assert bnd.all_passed(reps.values())


def test_hopf_equality_cases():
    mesh, _, res = cached_solve("hopf_s2s1", (48, 48))
    reps = _by_id(bnd.verify(mesh, res))
    assert reps["S2S1_ii"].equality_case == "hopf_torus"
    assert abs(reps["S2S1_ii"].margin) < bnd.TOL_EQ
    mesh, _, res = cached_solve("hopf_berger", (48, 48))
    reps = _by_id(bnd.verify(mesh, res))
    assert reps["SB_A_ii"].equality_case == "hopf_torus"
    assert reps["SB_A_i"].equality_case == "none" and reps["SB_A_i"].strict


def test_slice_equality():
    mesh, _, res = cached_solve("slice", (3,))
    reps = _by_id(bnd.verify(mesh, res))
    assert reps["S2R_i"].equality_case == "horizontal_slice"
    assert reps["S2R_ii"].strict and reps["S2R_ii"].equality_case == "none"


def test_strict_bounds_never_classified():
    # a fake eigenvalue sitting exactly on a strict bound
    mesh, _, res = cached_solve("hopf_berger", (24, 24))
    reps = _by_id(bnd.verify(mesh, -2 * 0.81))
    assert reps["SB_A_i"].margin == pytest.approx(0, abs=1e-14)
    assert reps["SB_A_i"].equality_case == "none"


def test_violation_is_detected():
    mesh, _, res = cached_solve("clifford", (24, 24))
    reps = _by_id(bnd.verify(mesh, -3.5))
    assert not reps["C1_2_ii"].passed
    assert not bnd.all_passed(reps.values())


def test_identity_rhs_below_bounds():
    from cmcstab.spectrum import identity_terms

    for key, res in [("hopf_s2s1", (48, 48)), ("clifford", (48, 48)), ("great_sphere", (3,))]:
        mesh, _, r = cached_solve(key, res)
        rhs = identity_terms(mesh, r)
        rhs = rhs.get("homogeneous", rhs["general"])
        for rep in bnd.verify(mesh, r):
            assert rhs <= rep.bound_value + bnd.TOL_VERIFY * (1 + abs(rep.bound_value))


def test_verify_requires_cmc():
    mesh = build_mesh(perturbed(clifford_torus(1.0), 0.05), (16, 16))
    _, r = solve(mesh, shift_policy="potential")
    with pytest.raises(NonConstantH):
        bnd.verify(mesh, r)


def test_vertical_normal_diagnostic(caplog):
    mesh, _, res = cached_solve("hopf_berger", (24, 24))
    assert bnd.vertical_normal_fraction(mesh) == 0.0
    with caplog.at_level(logging.WARNING):
        bnd.verify(mesh, res)
    assert not caplog.records


def test_report_rows():
    mesh, _, res = cached_solve("slice", (3,))
    rows = bnd.report_rows(bnd.verify(mesh, res))
    assert all(len(r) == len(bnd.CSV_FIELDS) for r in rows)


# -- stability corollaries -----------------------------------------------------------


def _cons(checks):
    return {c["corollary"]: c for c in checks}


def test_corollaries_on_examples():
    s2r = AmbientSpace("ProductS2R", kappa=1.0)
    c = _cons(bnd.stability_corollaries(s2r, 0.0, 0, FOUR_PI, 0.0, horizontal_slice=True))
    assert c["S2R_only_slices"]["applicable"] and c["S2R_only_slices"]["consistent"]
    c = _cons(bnd.stability_corollaries(AmbientSpace.space_form(1.0), 0.0, 1, 19.7, -4.0))
    assert c["C1_3_i"]["applicable"] and c["C1_3_i"]["consistent"]
    berger = AmbientSpace("BergerSphere", kappa=4.0, tau=0.9)
    c = _cons(bnd.stability_corollaries(berger, 0.0, 1, 5.0, -4.0))
    assert c["BERGER_none_stable"]["consistent"]


def test_corollaries_catch_contradictions():
    c = _cons(bnd.stability_corollaries(AmbientSpace.space_form(1.0), 0.0, 1, 19.7, 0.5))
    assert not c["C1_3_i"]["consistent"]
    nil = AmbientSpace("Heisenberg", tau=0.5)
    c = _cons(bnd.stability_corollaries(nil, 0.0, 3, 1.0, 0.1))
    assert c["NIL_ii"]["applicable"] and not c["NIL_ii"]["consistent"]
    h2r = AmbientSpace("ProductH2R", kappa=-1.0)
    c = _cons(bnd.stability_corollaries(h2r, 0.0, 2, 100.0, 0.0))
    assert c["H2R_ii"]["applicable"] and c["H2R_ii"]["consistent"]
    c = _cons(bnd.stability_corollaries(h2r, 0.0, 2, 1.0, 0.0))
    assert not c["H2R_ii"]["consistent"]
    sl2 = AmbientSpace("Sl2Universal", kappa=-1.0, tau=0.5)
    c = _cons(bnd.stability_corollaries(sl2, 1.0, 0, 1.0, 0.3))
    assert c["SL2_i"]["applicable"] and not c["SL2_i"]["consistent"]
