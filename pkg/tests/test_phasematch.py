import math

import numpy as np
import pytest

from oracles import crystal_from_lab, kz_root
from spdccomp.errors import ArgumentError, DomainError, NotPhasematchableError
from spdccomp.materials import Material, get_material
from spdccomp.phasematch import (
    CrystalPlate,
    SpdcTriplet,
    emission_angle,
    external_kt,
    internal_direction,
    internal_kz,
    mismatch_q,
    orient_for_vertical_pump,
    phasematch_mismatch,
    solve_cut_angle,
    solve_transverse_q,
)

R = math.radians
DEG = SpdcTriplet.from_pump_signal(405.0, 810.0)


def bibo_plate(rotation=0.0):
    return CrystalPlate(get_material("BiBO"), R(151.7), R(90.0), 0.6, "dc_crystal_1", rotation)


def test_rotation_matches_hand_built_convention():
    for theta, phi, rot in [(0.5, 0.2, 0.0), (2.6, 1.57, 0.4), (1.0, 4.0, 2.0)]:
        plate = CrystalPlate(get_material("BBO"), theta, phi, 1.0, "plate", rot)
        np.testing.assert_allclose(plate.crystal_from_lab, crystal_from_lab(theta, phi, rot), atol=1e-15)


@pytest.mark.parametrize("branch", ["fast", "slow"])
@pytest.mark.parametrize("kt", [(0.0, 0.0), (300.0, 0.0), (-200.0, 350.0), (0.0, -500.0)])
def test_internal_kz_matches_root_oracle(branch, kt):
    plate = bibo_plate(R(90))
    got = float(internal_kz(plate, 810.0, branch, np.array(kt)))
    assert got == pytest.approx(kz_root(plate, 810.0, branch, kt), rel=1e-12)


def test_evanescent_is_domain_error():
    with pytest.raises(DomainError):
        internal_kz(bibo_plate(), 810.0, "slow", np.array([3e4, 0.0]))


def test_triplet_energy_conservation():
    t = SpdcTriplet.from_pump_signal(405.0, 851.0)
    assert 1 / t.lambda_p == pytest.approx(1 / t.lambda_s + 1 / t.lambda_i, rel=1e-12)
    assert t.lambda_i == pytest.approx(772.769, abs=1e-3)
    with pytest.raises(ArgumentError):
        SpdcTriplet(405.0, 851.0, 771.4)


def test_mismatch_vanishes_at_solved_root():
    plate = orient_for_vertical_pump(bibo_plate(), 405.0)
    q = solve_transverse_q(plate, DEG, azimuth=R(90))
    assert abs(float(mismatch_q(plate, DEG, q, R(90)))) < 1e-9


def test_mismatch_symmetric_under_swap_at_degeneracy():
    plate = orient_for_vertical_pump(CrystalPlate(get_material("BBO"), R(29.3), 0.0, 0.6), 405.0)
    a = phasematch_mismatch(plate, DEG, R(1.8), azimuth=0.3)
    swapped = SpdcTriplet(DEG.lambda_p, DEG.lambda_i, DEG.lambda_s)
    b = phasematch_mismatch(plate, swapped, R(1.8), azimuth=0.3)
    assert float(a) == pytest.approx(float(b), abs=1e-12)


def test_mismatch_changes_sign_across_phasematching_angle():
    bbo = get_material("BBO")
    thetas = np.radians(np.linspace(26.0, 32.0, 61))
    vals = []
    for th in thetas:
        plate = orient_for_vertical_pump(CrystalPlate(bbo, th, 0.0, 0.6), 405.0)
        vals.append(float(mismatch_q(plate, DEG, 0.0)))
    signs = np.sign(vals)
    flips = np.nonzero(np.diff(signs))[0]
    assert len(flips) == 1
    th_star = solve_cut_angle(bbo, 0.0, 405.0, 810.0, 0.0)
    assert thetas[flips[0]] <= th_star <= thetas[flips[0] + 1]


def test_bibo_cone_is_three_degrees():
    plate = orient_for_vertical_pump(bibo_plate(), 405.0)
    a_s, a_i = emission_angle(plate, 405.0, 810.0, azimuth=R(90))
    assert math.degrees(a_s) == pytest.approx(3.0, abs=0.5)
    assert abs(a_s - a_i) < 1e-9


def test_bibo_cut_solver():
    theta = solve_cut_angle(get_material("BiBO"), R(90), 405.0, 810.0, R(3.0), guess=R(150), azimuth=R(90))
    assert math.degrees(theta) == pytest.approx(151.7, abs=1.0)


def test_bbo_cut_solver():
    theta = solve_cut_angle(get_material("BBO"), 0.0, 405.0, 810.0, R(3.0), azimuth=R(90))
    assert math.degrees(theta) == pytest.approx(29.3, abs=0.5)


def test_collinear_cut_round_trip():
    bbo = get_material("BBO")
    theta = solve_cut_angle(bbo, 0.0, 405.0, 810.0, 0.0)
    plate = orient_for_vertical_pump(CrystalPlate(bbo, theta, 0.0, 0.6), 405.0)
    a_s, _ = emission_angle(plate, 405.0, 810.0)
    assert abs(a_s) < 1e-6
    assert solve_cut_angle(bbo, 0.0, 405.0, 810.0, 0.0, guess=theta) == pytest.approx(theta, abs=1e-9)


def test_cut_round_trip_reproduces_target():
    bbo = get_material("BBO")
    theta = solve_cut_angle(bbo, 0.0, 405.0, 810.0, R(2.0), azimuth=R(90))
    plate = orient_for_vertical_pump(CrystalPlate(bbo, theta, 0.0, 0.6), 405.0)
    assert emission_angle(plate, 405.0, 810.0, R(90))[0] == pytest.approx(R(2.0), abs=1e-4)


def test_unattainable_target_lists_range():
    with pytest.raises(DomainError, match="attainable"):
        solve_cut_angle(get_material("BBO"), 0.0, 405.0, 810.0, R(60.0))


def test_not_phasematchable_reports_best_angle():
    plate = orient_for_vertical_pump(CrystalPlate(get_material("BBO"), R(15.0), 0.0, 0.6), 405.0)
    with pytest.raises(NotPhasematchableError) as info:
        emission_angle(plate, 405.0, 810.0)
    assert info.value.best_angle is not None


def test_snell_small_angle_ratio():
    # a cut just past collinear gives a small cone; external/internal ~ n of the daughter branch
    bbo = get_material("BBO")
    theta = solve_cut_angle(bbo, 0.0, 405.0, 810.0, R(0.3))
    plate = orient_for_vertical_pump(CrystalPlate(bbo, theta, 0.0, 0.6), 405.0)
    a_ext, _ = emission_angle(plate, 405.0, 810.0)
    kt = external_kt(810.0, a_ext, 0.0)
    d = internal_direction(plate, 810.0, "slow", kt)
    a_int = math.atan2(math.hypot(d[0], d[1]), d[2])
    n_slow = bbo.principal_indices(810.0)[0]
    assert a_ext / a_int == pytest.approx(n_slow, rel=1e-3)


def test_uniaxial_and_biaxial_paths_agree():
    bbo = get_material("BBO")
    rec = bbo.to_record()
    rec["name"] = "bbo_biaxial"
    rec["symmetry"] = "biaxial"
    rec["axes"] = [rec["axes"][0], rec["axes"][0], rec["axes"][1]]
    fake = Material.from_record(rec)
    for az in (0.0, R(90), R(33)):
        a = emission_angle(orient_for_vertical_pump(CrystalPlate(bbo, R(29.3), 0.0, 0.6), 405.0), 405.0, 810.0, az)
        b = emission_angle(orient_for_vertical_pump(CrystalPlate(fake, R(29.3), 0.0, 0.6), 405.0), 405.0, 810.0, az)
        assert a[0] == pytest.approx(b[0], abs=1e-8)


def test_crystal_two_is_rotated_crystal_one(bibo_deg):
    c1, c2 = bibo_deg.crystal1, bibo_deg.crystal2
    assert c2.rotation - c1.rotation == pytest.approx(math.pi / 2)
    assert c1.branch_for("V", 405.0) == "fast"
    assert c2.branch_for("H", 405.0) == "fast"


def test_plate_validation():
    with pytest.raises(ArgumentError):
        CrystalPlate(get_material("BBO"), 0.5, 0.0, -1.0)
    with pytest.raises(ArgumentError):
        CrystalPlate(get_material("BBO"), 0.5, 0.0, 1.0, role="lens")


def test_isotropic_material_has_no_type_one_solution():
    # normal dispersion leaves k_p > k_s + k_i for every emission angle
    plate = CrystalPlate(get_material("fused_silica"), 0.3, 0.0, 1.0)
    with pytest.raises((NotPhasematchableError, DomainError)):
        emission_angle(plate, 405.0, 810.0)
