import json
import math

import numpy as np
import pytest

from conftest import sc_pair
from spdccomp.errors import ArgumentError, CompensationError, GridError
from spdccomp.materials import constant_material, get_material
from spdccomp.phasematch import CrystalPlate, SpdcTriplet
from spdccomp.source import (
    NO_FILTER,
    PumpSpec,
    SourceSetup,
    SpectralFilter,
    fwhm_nm_to_rad_per_fs,
    rad_per_fs_to_fwhm_nm,
)
from spdccomp import temporal as T

from oracles import fd_derivatives, k_of_omega, plate_n

R = math.radians


# --- pump and filter conventions -------------------------------------------------------


def test_sigma_round_trip():
    for fwhm in (0.1, 0.5, 4.0, 10.0):
        p = PumpSpec(405.0, fwhm, "pulsed")
        q = PumpSpec.from_sigma(405.0, p.sigma)
        assert q.fwhm_nm == pytest.approx(fwhm, rel=1e-12)
    assert rad_per_fs_to_fwhm_nm(fwhm_nm_to_rad_per_fs(3.0, 810.0), 810.0) == pytest.approx(3.0, rel=1e-14)


def test_intensity_fwhm_convention():
    p = PumpSpec(405.0, 0.5)
    half = fwhm_nm_to_rad_per_fs(0.5, 405.0) / 2
    # |exp(-(nu/sigma)^2)|^2 falls to one half at the FWHM edge
    assert math.exp(-2 * (half / p.sigma) ** 2) == pytest.approx(0.5, rel=1e-12)


def test_filter_fwhm_refers_to_intensity():
    f = SpectralFilter(10.0)
    edge = fwhm_nm_to_rad_per_fs(10.0, 810.0) / 2
    assert float(f.amplitude(edge, 810.0)) ** 2 == pytest.approx(0.5, rel=1e-12)


# --- delays -------------------------------------------------------------------------------


def _inv_v(plate, lam, branch, d_lab):
    """1/V_g along a lab direction by finite differences of the Fresnel index."""
    d = np.array([0.0, 0.0, 1.0]) if d_lab is None else np.asarray(d_lab, float)
    omega = 2 * math.pi * 299.792458 / lam
    return fd_derivatives(lambda w: k_of_omega(None, lambda l: plate_n(plate, l, branch, d), w), omega, 1e-3)[0]


def _segment_times(setup):
    """Exit times rebuilt as sum of d / V_g over the pump and daughter segments."""
    c1, c2 = setup.crystal1, setup.crystal2
    lp = setup.triplet.lambda_p
    dirs = T.daughter_directions(setup)
    out = []
    for arm, lam in (("s", setup.triplet.lambda_s), ("i", setup.triplet.lambda_i)):
        t1 = (c1.thickness / 2 * _inv_v(c1, lp, "fast", None)
              + c1.thickness / 2 * _inv_v(c1, lam, "slow", dirs[(arm, 1, "slow")])
              + c2.thickness * _inv_v(c2, lam, "fast", dirs[(arm, 2, "fast")]))
        t2 = (c1.thickness * _inv_v(c1, lp, "slow", None)
              + c2.thickness / 2 * _inv_v(c2, lp, "fast", None)
              + c2.thickness / 2 * _inv_v(c2, lam, "slow", dirs[(arm, 2, "slow")]))
        out.append((t1, t2))
    return out


@pytest.mark.parametrize("name", ["diode-bibo-degenerate", "diode-bibo-nondegenerate", "ultrafast-bbo"])
def test_exit_times_match_segment_oracle(all_presets, name):
    s = all_presets[name]
    t = T.crystal_exit_times(s)
    (t1s, t2s), (t1i, t2i) = _segment_times(s)
    # finite-difference oracle; agreement limited by the stencil, far below 1e-3 fs
    assert t.t1_s == pytest.approx(t1s, abs=1e-3)
    assert t.t2_s == pytest.approx(t2s, abs=1e-3)
    assert t.t1_i == pytest.approx(t1i, abs=1e-3)
    assert t.t2_i == pytest.approx(t2i, abs=1e-3)
    assert T.delta_t_dc(s, "signal") == pytest.approx(t.t2_s - t.t1_s, abs=1e-9)
    assert T.delta_t_dc(s, "idler") == pytest.approx(t.t2_i - t.t1_i, abs=1e-9)


def test_zero_thickness_gives_zero_times(bibo_deg):
    t = T.crystal_exit_times(bibo_deg.with_crystal_thickness(0.0), collinear=True)
    assert (t.t1_s, t.t1_i, t.t2_s, t.t2_i) == (0.0, 0.0, 0.0, 0.0)


def test_equal_group_velocities_give_no_delay():
    glass = constant_material("flat", (1.6, 1.6))
    plate = CrystalPlate(glass, R(30), 0.0, 0.6, "dc_crystal_1")
    s = SourceSetup(plate, plate.rotated(math.pi / 2), PumpSpec(405.0, 1.0), SpdcTriplet.from_pump_signal(405.0, 810.0))
    assert T.delta_t_dc(s, "signal", collinear=True) == pytest.approx(0.0, abs=1e-12)


def test_bbo_walkoff_delay(bbo_fast):
    assert T.delta_t_dc(bbo_fast, "signal") == pytest.approx(253, rel=0.10)
    assert T.delta_t_dc(bbo_fast, "idler") == pytest.approx(253, rel=0.10)


def test_bibo_walkoff_delay(bibo_deg):
    for arm in ("signal", "idler"):
        assert T.delta_t_dc(bibo_deg, arm) == pytest.approx(600, rel=0.10)


def test_precompensator_delays(bbo, quartz):
    q = CrystalPlate(quartz, math.pi / 2, 0.0, 16.0, "precompensator")
    assert abs(T.tau_pc(q, 405.0)) == pytest.approx(600, rel=0.15)
    b = CrystalPlate(bbo, R(29.4), 0.0, 1.9, "precompensator")
    assert abs(T.tau_pc(b, 405.0)) == pytest.approx(253, rel=0.15)
    assert T.tau_pc(None, 405.0) == 0.0
    assert T.tau_pc(q.with_thickness(0.0), 405.0) == 0.0


def test_quarter_turn_reverses_precompensator_delay(quartz):
    q = CrystalPlate(quartz, math.pi / 2, 0.0, 10.0, "precompensator")
    assert T.tau_pc(q.rotated(math.pi / 2), 405.0) == pytest.approx(-T.tau_pc(q, 405.0), rel=1e-12)


def test_spatial_compensators_add_delay(bibo_deg):
    bare = T.delay_budget(bibo_deg.uncompensated())
    comp = T.delay_budget(bibo_deg)
    assert comp.tau_sc_s > 0 and comp.tau_sc_i > 0
    assert comp.net_s == pytest.approx(640, rel=0.15)
    assert comp.net_i == pytest.approx(640, rel=0.15)
    assert comp.net_s - bare.net_s == pytest.approx(comp.tau_sc_s, abs=1e-9)


def test_budget_sign_convention(bibo_deg):
    b = T.delay_budget(bibo_deg)
    assert b.net_s == pytest.approx(b.dt_dc_s - b.tau_pc + b.tau_sc_s, abs=1e-12)
    data = json.loads(json.dumps(b.to_json()))
    assert set(data) >= {"net_s_fs", "net_i_fs", "tau_pc_fs"}


# --- joint amplitude -------------------------------------------------------------------------------


def test_jtpa_matches_pointwise_formula(bibo_deg):
    g = T.jtpa(bibo_deg, filters=False, check=False, halfwidth=0.05, n=128)
    rng = np.random.default_rng(7)
    idx = rng.integers(0, 128, size=(100, 2))
    for a, b in idx:
        val = T.jtpa_formula(g.params, g.nu_s_axis[a], g.nu_i_axis[b])
        assert abs(g.amplitude[a, b] - val) <= 1e-12


def test_jtpa_peak_at_origin(bibo_deg):
    p = T.jtpa_params(bibo_deg)
    assert abs(T.jtpa_formula(p, 0.0, 0.0)) == 1.0
    nu = np.linspace(-0.05, 0.05, 101)
    assert np.max(np.abs(T.jtpa_formula(p, nu[:, None], nu[None, :]))) <= 1.0


def test_narrow_pump_collapses_onto_anticorrelation_line(bibo_deg):
    p = T.jtpa_params(bibo_deg, include_gvd=False, collinear=True)
    narrow = T.JtpaParams(p.d, p.D_s, p.D_i, 0.0, 1e-6)
    assert abs(T.jtpa_formula(narrow, 0.01, -0.01)) == pytest.approx(1.0, abs=1e-6)
    assert abs(T.jtpa_formula(narrow, 0.01, -0.0099)) < 1e-10


def test_jtpa_reduces_to_degenerate_d_plus(bbo_fast, bbo):
    p = T.jtpa_params(bbo_fast, collinear=True)
    c1 = bbo_fast.crystal1
    d_plus = T.k1(c1, 810.0, "slow") - T.k1(c1, 405.0, "fast")
    assert p.D_s == pytest.approx(d_plus, rel=1e-12)
    assert p.D_i == pytest.approx(d_plus, rel=1e-12)


def test_grid_truncation_reported(bibo_deg):
    with pytest.raises(GridError) as info:
        T.jtpa(bibo_deg, halfwidth=0.02)
    assert info.value.suggested_halfwidth > 0.02


def test_grid_is_contained(all_presets):
    for s in all_presets.values():
        g = T.jtpa(s)
        assert g.meta["edge_ratio"] <= 1e-4
        assert g.norm() > 0


def test_monochromatic_pump_rejected(bibo_deg):
    with pytest.raises(ArgumentError):
        T.jtpa(bibo_deg.with_(pump=PumpSpec(405.0, 0.0)))


# --- visibility ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def grids(all_presets):
    return {k: T.jtpa(s) for k, s in all_presets.items()}


def test_visibility_at_zero_delay_is_one(grids):
    for g in grids.values():
        assert T.visibility(g, 0.0, 0.0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("name", ["diode-bibo-degenerate", "diode-bibo-nondegenerate", "ultrafast-bbo"])
def test_frequency_and_time_domain_visibility_agree(all_presets, grids, name):
    s, g = all_presets[name], grids[name]
    b = T.delay_budget(s.uncompensated())
    for ds, di in ((b.net_s, b.net_i), (120.0, -40.0), (-300.0, 0.0)):
        assert abs(T.visibility(g, ds, di) - T.time_domain_visibility(g, ds, di)) < 1e-3


def test_visibility_non_increasing_along_delay_rays(grids):
    g = grids["diode-bibo-degenerate"]
    for direction in ((1, 1), (1, 0), (0, 1), (1, -1), (-1, -0.5)):
        mags = [abs(T.visibility(g, t * direction[0], t * direction[1])) for t in np.linspace(0, 1500, 31)]
        assert np.all(np.diff(mags) <= 1e-12)


def test_narrower_filters_raise_visibility(bibo_deg):
    vals = []
    for fw in (20.0, 10.0, 5.0, 2.0):
        f = SpectralFilter(fw)
        s = bibo_deg.with_(filter_signal=f, filter_idler=f)
        vals.append(abs(T.visibility(T.jtpa(s), 600.0, 600.0)))
    assert np.all(np.diff(vals) > 0)


def test_extra_filters_in_visibility(grids):
    g = grids["ultrafast-bbo"]
    f = SpectralFilter(3.0)
    assert abs(T.visibility(g, 200.0, 200.0, filters=(f, f))) > abs(T.visibility(g, 200.0, 200.0))


def test_exact_phase_linear_part_is_net_delay(bibo_nondeg, grids):
    g = grids["diode-bibo-nondegenerate"]
    s = bibo_nondeg.with_(precompensator=CrystalPlate(get_material("quartz"), math.pi / 2, 0.0, 12.0, "precompensator"))
    phi = T.relative_spectral_phase(s, g, "exact")
    b = T.delay_budget(s)
    # the even grid straddles zero symmetrically, so this difference cancels the quadratic term
    a, b_ = len(g.nu_s_axis) // 2 - 1, len(g.nu_s_axis) // 2
    assert g.nu_s_axis[a] == pytest.approx(-g.nu_s_axis[b_])
    h = g.nu_s_axis[b_] - g.nu_s_axis[a]
    d_s = (phi[b_, a] + phi[b_, b_] - phi[a, a] - phi[a, b_]) / (2 * h)
    d_i = (phi[a, b_] + phi[b_, b_] - phi[a, a] - phi[b_, a]) / (2 * h)
    assert d_s == pytest.approx(-b.net_s, abs=0.05)
    assert d_i == pytest.approx(-b.net_i, abs=0.05)


def test_first_order_phase_reproduces_delay_visibility(bibo_deg, grids):
    g = grids["diode-bibo-degenerate"]
    b = T.delay_budget(bibo_deg)
    assert T.source_visibility(bibo_deg, g, order=1) == pytest.approx(T.visibility(g, b.net_s, b.net_i), abs=1e-12)


# --- precompensator design and tangle curves ---------------------------------------------------


def test_quartz_precompensator_lengths(bibo_deg, quartz):
    bare = T.design_precompensator(bibo_deg.uncompensated(), quartz)
    comp = T.design_precompensator(bibo_deg, quartz)
    assert bare.length == pytest.approx(16.0, rel=0.15)
    assert comp.length == pytest.approx(17.2, rel=0.15)
    assert comp.length > bare.length


def test_bbo_precompensator_lengths(bbo_fast, bbo):
    bare = T.design_precompensator(bbo_fast.uncompensated(), bbo, R(29.4))
    comp = T.design_precompensator(bbo_fast, bbo, R(29.4))
    assert bare.length == pytest.approx(1.9, rel=0.15)
    assert comp.length == pytest.approx(2.1, rel=0.15)


def test_zero_delay_needs_no_precompensator(bibo_deg, quartz):
    d = T.design_precompensator(bibo_deg.uncompensated().with_crystal_thickness(0.0), quartz)
    assert d.length == pytest.approx(0.0, abs=1e-12)


def test_precompensator_is_local_optimum(bibo_nondeg, quartz, grids):
    g = grids["diode-bibo-nondegenerate"]
    d = T.design_precompensator(bibo_nondeg, quartz, grid=g)
    b = T.delay_budget(bibo_nondeg)

    def vis(tpc):
        return abs(T.visibility(g, b.dt_dc_s - tpc + b.tau_sc_s, b.dt_dc_i - tpc + b.tau_sc_i))

    assert vis(d.tau_pc) > vis(d.tau_pc + 2.0)
    assert vis(d.tau_pc) > vis(d.tau_pc - 2.0)
    assert d.needs_postcompensator


def test_isotropic_precompensator_rejected(bibo_deg):
    with pytest.raises(CompensationError):
        T.design_precompensator(bibo_deg, get_material("fused_silica"))


def test_tangle_curve_peak_and_far_side(bibo_deg, grids):
    g = grids["diode-bibo-degenerate"]
    delays = np.linspace(-600, 1800, 121)
    curve = T.tangle_vs_delay(bibo_deg, delays, grid=g)
    b = curve.budget
    assert curve.peak() == pytest.approx(b.target_pc, abs=5.0)
    neg = curve.tangle[delays <= 0]
    assert np.all(np.diff(neg) >= -1e-12)  # rising towards zero delay
    assert np.all(neg[:-1] < curve.tangle[np.argmin(np.abs(delays))])
    assert curve.to_csv().splitlines()[0] == "delay_fs,tangle"
    assert json.loads(json.dumps(curve.to_json()))["schema_version"] == 1


def test_doubling_pump_width_halves_peak_width(bibo_deg):
    # pump-limited regime: sigma well inside the phasematching bandwidth along nu_s + nu_i
    delays = np.linspace(-20000, 21000, 801)
    widths = []
    for fw in (0.2, 0.4):
        s = bibo_deg.with_(pump=PumpSpec(405.0, fw))
        widths.append(T.tangle_vs_delay(s, delays).fwhm())
    assert widths[1] / widths[0] == pytest.approx(0.5, rel=0.10)


def test_empty_delay_list(bibo_deg):
    with pytest.raises(ArgumentError):
        T.tangle_vs_delay(bibo_deg, [])


def test_no_filter_constant():
    assert NO_FILTER.shape == "none"
    assert np.all(NO_FILTER.amplitude(np.linspace(-1, 1, 5), 810.0) == 1)
