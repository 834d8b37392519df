"""Spectral-temporal which-crystal information: delays, joint amplitude, visibility.

Delay convention: t^1 is the exit time of a pair born in crystal 1 (HH), t^2
of a pair born in crystal 2 (VV), both measured from the pump entering
crystal 1.  Delta t = t^2 - t^1.  A precompensator delays the V pump (which
feeds crystal 1) by tau_pc relative to the H pump; a spatial compensator
delays the V photon by tau_sc relative to the H photon.  The net arm delay

    net = Delta t - tau_pc + tau_sc

vanishes for ideal compensation.  Frequencies are detunings nu (rad/fs) from
the signal and idler centre frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .errors import ArgumentError, CompensationError, GridError, NumericError
from .materials import C_NM_PER_FS, gvd, inverse_group_velocity, wavenumber
from .phasematch import CrystalPlate, internal_direction
from .source import NO_FILTER, PumpSpec, SourceSetup, SpectralFilter  # noqa: F401  (re-exported)

Z = np.array([0.0, 0.0, 1.0])
SCHEMA_VERSION = 1


def omega_of(wavelength_nm):
    return 2 * math.pi * C_NM_PER_FS / np.asarray(wavelength_nm, dtype=float)


def wavelength_of(omega):
    return 2 * math.pi * C_NM_PER_FS / np.asarray(omega, dtype=float)


# --- per-segment quantities ------------------------------------------------------------


def _dir(plate: CrystalPlate, direction_lab):
    return plate.to_crystal(Z if direction_lab is None else direction_lab)


def k1(plate: CrystalPlate, wavelength_nm, branch, direction_lab=None):
    """1/V_g (fs/mm) for ``branch`` along a lab direction (default: the pump axis)."""
    return float(inverse_group_velocity(plate.material, wavelength_nm, branch, direction=_dir(plate, direction_lab)))


def k2(plate: CrystalPlate, wavelength_nm, branch, direction_lab=None):
    """GVD (fs^2/mm) for ``branch`` along a lab direction."""
    return float(gvd(plate.material, wavelength_nm, branch, direction=_dir(plate, direction_lab)))


def k0(plate: CrystalPlate, wavelength_nm, branch, direction_lab=None):
    """Wavenumber (1/mm)."""
    return float(wavenumber(plate.material, wavelength_nm, branch, direction=_dir(plate, direction_lab)))


def _pol_branches(plate: CrystalPlate, wavelength_nm):
    b_h = plate.branch_for("H", wavelength_nm)
    return ("slow" if b_h == "fast" else "fast"), b_h


def plate_delay(plate: CrystalPlate | None, wavelength_nm, direction_lab=None):
    """l * (1/V_g[V] - 1/V_g[H]) in fs: how much the V component lags the H component."""
    if plate is None or plate.thickness == 0:
        return 0.0
    b_v, b_h = _pol_branches(plate, wavelength_nm)
    return plate.thickness * (
        k1(plate, wavelength_nm, b_v, direction_lab) - k1(plate, wavelength_nm, b_h, direction_lab)
    )


def tau_pc(plate: CrystalPlate | None, lambda_p):
    """Precompensator delay of the V pump relative to the H pump (fs)."""
    return plate_delay(plate, lambda_p)


def tau_sc(plate: CrystalPlate | None, wavelength_nm):
    """Spatial-compensator delay of the V photon relative to the H photon (fs)."""
    return plate_delay(plate, wavelength_nm)


# --- source delays ---------------------------------------------------------------------


def daughter_directions(setup: SourceSetup):
    """Internal unit wave vectors (lab frame) of the signal and idler cone centres in crystal 1 and 2.

    Returned as {(arm, crystal_index, branch): vector}.  Collinear if the cone
    angle cannot be found.
    """
    from .spatialphase import paired_wavevectors

    kt_s, kt_i = paired_wavevectors(setup, np.zeros(2))
    out = {}
    for arm, kt, lam in (("s", kt_s, setup.triplet.lambda_s), ("i", kt_i, setup.triplet.lambda_i)):
        for idx, plate in ((1, setup.crystal1), (2, setup.crystal2)):
            for br in ("fast", "slow"):
                out[(arm, idx, br)] = internal_direction(plate, lam, br, kt)
    return out


@dataclass(frozen=True)
class ExitTimes:
    t1_s: float
    t1_i: float
    t2_s: float
    t2_i: float


def crystal_exit_times(setup: SourceSetup, collinear=False) -> ExitTimes:
    """Exit times of crystal-1 (HH) and crystal-2 (VV) pairs, pump-entry referenced (fs).

    Pump halves: the V pump runs half of crystal 1 on its fast branch; the H
    pump crosses crystal 1 on the slow branch and half of crystal 2 on its fast
    branch.  Daughters run the rest of the birth crystal on the slow branch and
    crystal-1 photons cross crystal 2 on its fast branch.
    """
    c1, c2 = setup.crystal1, setup.crystal2
    lp = setup.triplet.lambda_p
    d1, d2 = c1.thickness, c2.thickness
    dirs = None if collinear else daughter_directions(setup)

    def dk(arm, idx, br, lam):
        plate = c1 if idx == 1 else c2
        return k1(plate, lam, br, None if dirs is None else dirs[(arm, idx, br)])

    out = {}
    for arm, lam in (("s", setup.triplet.lambda_s), ("i", setup.triplet.lambda_i)):
        t1 = d1 / 2 * k1(c1, lp, "fast") + d1 / 2 * dk(arm, 1, "slow", lam) + d2 * dk(arm, 2, "fast", lam)
        t2 = d1 * k1(c1, lp, "slow") + d2 / 2 * k1(c2, lp, "fast") + d2 / 2 * dk(arm, 2, "slow", lam)
        out[arm] = (t1, t2)
    return ExitTimes(out["s"][0], out["i"][0], out["s"][1], out["i"][1])


def delta_t_dc(setup: SourceSetup, arm="signal", collinear=False) -> float:
    """Delay of VV behind HH for one arm (fs)."""
    t = crystal_exit_times(setup, collinear)
    if arm in ("signal", "s"):
        return t.t2_s - t.t1_s
    if arm in ("idler", "i"):
        return t.t2_i - t.t1_i
    raise ArgumentError(f"arm must be 'signal' or 'idler', got {arm!r}")


@dataclass(frozen=True)
class DelayBudget:
    dt_dc_s: float
    dt_dc_i: float
    tau_pc: float
    tau_sc_s: float
    tau_sc_i: float

    @property
    def net_s(self):
        return self.dt_dc_s - self.tau_pc + self.tau_sc_s

    @property
    def net_i(self):
        return self.dt_dc_i - self.tau_pc + self.tau_sc_i

    @property
    def target_pc(self):
        """Precompensator delay cancelling the mean arm delay."""
        return 0.5 * (self.dt_dc_s + self.tau_sc_s + self.dt_dc_i + self.tau_sc_i)

    def to_json(self) -> dict:
        return {
            "dt_dc_s_fs": self.dt_dc_s,
            "dt_dc_i_fs": self.dt_dc_i,
            "tau_pc_fs": self.tau_pc,
            "tau_sc_s_fs": self.tau_sc_s,
            "tau_sc_i_fs": self.tau_sc_i,
            "net_s_fs": self.net_s,
            "net_i_fs": self.net_i,
        }


def delay_budget(setup: SourceSetup, collinear=False) -> DelayBudget:
    t = crystal_exit_times(setup, collinear)
    return DelayBudget(
        dt_dc_s=t.t2_s - t.t1_s,
        dt_dc_i=t.t2_i - t.t1_i,
        tau_pc=tau_pc(setup.precompensator, setup.triplet.lambda_p),
        tau_sc_s=tau_sc(setup.sc_signal, setup.triplet.lambda_s),
        tau_sc_i=tau_sc(setup.sc_idler, setup.triplet.lambda_i),
    )


# --- joint two-photon amplitude -------------------------------------------------------


@dataclass(frozen=True)
class JtpaParams:
    """Coefficients of the phasematching argument X = d/2 (D_s nu_s + D_i nu_i + D''/4 (nu_s - nu_i)^2)."""

    d: float
    D_s: float
    D_i: float
    D2: float
    sigma: float

    @property
    def D_plus(self):
        return 0.5 * (self.D_s + self.D_i)


def jtpa_params(setup: SourceSetup, include_gvd=True, collinear=False) -> JtpaParams:
    """Mismatch coefficients in crystal 1 (D_s,i = 1/V_g daughter - 1/V_g pump)."""
    c1 = setup.crystal1
    lp = setup.triplet.lambda_p
    dirs = None if collinear else daughter_directions(setup)
    kp = k1(c1, lp, "fast")
    out = []
    for arm, lam in (("s", setup.triplet.lambda_s), ("i", setup.triplet.lambda_i)):
        direc = None if dirs is None else dirs[(arm, 1, "slow")]
        out.append((k1(c1, lam, "slow", direc) - kp, k2(c1, lam, "slow", direc)))
    d2 = 0.5 * (out[0][1] + out[1][1]) if include_gvd else 0.0
    return JtpaParams(c1.thickness, out[0][0], out[1][0], d2, setup.pump.sigma)


def jtpa_formula(params: JtpaParams, nu_s, nu_i):
    """Pointwise f(nu_s, nu_i): Gaussian pump envelope times phasematching sinc with its phase."""
    nu_s = np.asarray(nu_s, dtype=float)
    nu_i = np.asarray(nu_i, dtype=float)
    x = 0.5 * params.d * (params.D_s * nu_s + params.D_i * nu_i + 0.25 * params.D2 * (nu_s - nu_i) ** 2)
    env = np.exp(-(((nu_s + nu_i) / params.sigma) ** 2))
    return env * np.exp(-1j * x) * np.sinc(x / math.pi)


@dataclass
class JtpaGrid:
    nu_s_axis: np.ndarray
    nu_i_axis: np.ndarray
    amplitude: np.ndarray
    lambda_s: float
    lambda_i: float
    params: JtpaParams | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d_nu(self):
        return (self.nu_s_axis[1] - self.nu_s_axis[0], self.nu_i_axis[1] - self.nu_i_axis[0])

    def norm(self) -> float:
        return math.sqrt(_integrate2(np.abs(self.amplitude) ** 2, self.nu_s_axis, self.nu_i_axis))

    def normalized(self) -> "JtpaGrid":
        n = self.norm()
        if not n > 0:
            raise NumericError("JTPA has zero norm", residual=0.0)
        return replace(self, amplitude=self.amplitude / n)

    def filtered(self, filter_s: SpectralFilter, filter_i: SpectralFilter) -> "JtpaGrid":
        ws = filter_s.amplitude(self.nu_s_axis, self.lambda_s)
        wi = filter_i.amplitude(self.nu_i_axis, self.lambda_i)
        return replace(self, amplitude=self.amplitude * ws[:, None] * wi[None, :])


def _integrate2(values, x, y):
    return float(trapezoid(trapezoid(values, y, axis=1), x))


def _edge_ratio(a):
    peak = np.max(np.abs(a))
    if peak == 0:
        return 0.0
    edges = np.concatenate([a[0, :], a[-1, :], a[:, 0], a[:, -1]])
    return float(np.max(np.abs(edges)) / peak)


def _filter_halfwidth(f: SpectralFilter, lam):
    if f.shape == "none":
        return math.inf
    from .source import fwhm_nm_to_rad_per_fs

    w = fwhm_nm_to_rad_per_fs(f.fwhm_nm, lam)
    # Gaussian amplitude exp(-2 ln2 (x/w)^2) falls to 1e-5 at x = w*sqrt(ln(1e5)/(2 ln2))
    return w * math.sqrt(math.log(1e5) / (2 * math.log(2))) if f.shape == "gaussian" else w / 2


def jtpa(
    setup: SourceSetup,
    n=512,
    halfwidth=None,
    include_gvd=True,
    filters=True,
    check=True,
    edge_tol=1e-4,
    collinear=False,
) -> JtpaGrid:
    """Sample the (optionally filter-multiplied) JTPA on an n x n detuning grid.

    Without an explicit ``halfwidth`` the window is sized from the filters and
    the pump width and widened until the edge amplitude is below ``edge_tol``
    of the peak.
    """
    if n < 16:
        raise ArgumentError("grid needs at least 16 points per axis")
    if not setup.pump.sigma > 0:
        raise ArgumentError("the joint amplitude needs a finite pump bandwidth")
    p = jtpa_params(setup, include_gvd, collinear)
    fs, fi = (setup.filter_signal, setup.filter_idler) if filters else (NO_FILTER, NO_FILTER)
    auto = halfwidth is None
    if auto:
        sinc_w = 2 * math.pi / max(abs(p.d * p.D_plus), 1e-6)
        filt = min(_filter_halfwidth(fs, setup.triplet.lambda_s), _filter_halfwidth(fi, setup.triplet.lambda_i))
        h = min(filt, 40 * sinc_w) + 3 * p.sigma
    else:
        h = float(halfwidth)
    for _ in range(8 if auto else 1):
        ax = np.linspace(-h, h, n)
        grid = JtpaGrid(ax, ax.copy(), jtpa_formula(p, ax[:, None], ax[None, :]),
                        setup.triplet.lambda_s, setup.triplet.lambda_i, p)
        if filters:
            grid = grid.filtered(fs, fi)
        ratio = _edge_ratio(grid.amplitude)
        if not check or ratio <= edge_tol:
            break
        h *= 1.5
    else:
        raise GridError(
            f"JTPA not contained: edge/peak = {ratio:.2e}", suggested_halfwidth=h
        )
    if check and ratio > edge_tol:
        raise GridError(f"JTPA not contained: edge/peak = {ratio:.2e}", suggested_halfwidth=1.5 * h)
    if check and (ax[1] - ax[0]) > p.sigma / 2:
        raise GridError("grid too coarse for the pump bandwidth", suggested_halfwidth=h)
    grid.meta.update({"halfwidth": h, "edge_ratio": ratio, "n": n})
    return grid


# --- visibility -------------------------------------------------------------------------


def visibility(grid: JtpaGrid, delay_s, delay_i, filters=None, extra_phase=None):
    """v = sum |f|^2 exp(i(nu_s Ds + nu_i Di) - i extra_phase) over the normalised filtered JTPA.

    ``filters`` is an optional (signal, idler) pair applied on top of the grid.
    ``extra_phase`` is a relative spectral phase beyond the linear delays.
    """
    g = grid
    if filters is not None:
        g = g.filtered(*filters)
    w = np.abs(g.amplitude) ** 2
    total = _integrate2(w, g.nu_s_axis, g.nu_i_axis)
    if not total > 0:
        raise NumericError("zero norm after filtering", residual=0.0)
    ph = np.exp(1j * (g.nu_s_axis[:, None] * delay_s + g.nu_i_axis[None, :] * delay_i))
    if extra_phase is not None:
        ph = ph * np.exp(-1j * extra_phase)
    re = _integrate2(w * ph.real, g.nu_s_axis, g.nu_i_axis)
    im = _integrate2(w * ph.imag, g.nu_s_axis, g.nu_i_axis)
    return complex(re, im) / total


def time_domain_visibility(grid: JtpaGrid, delay_s, delay_i, n_t=256):
    """v from the time-domain overlap of f(t_s + Ds, t_i + Di) with f(t_s, t_i).

    f(t) is built by direct quadrature of f(nu) exp(+i nu t) onto an n_t x n_t
    time grid.  The step 0.8 pi / nu_max keeps the overlap integrand above its
    Nyquist rate, so the plain sum is an accurate quadrature.
    """
    a = grid.normalized().amplitude
    ns, ni = grid.nu_s_axis, grid.nu_i_axis
    dns, dni = grid.d_nu
    dt_s = 0.8 * math.pi / np.max(np.abs(ns))
    dt_i = 0.8 * math.pi / np.max(np.abs(ni))
    ts = (np.arange(n_t) - n_t / 2) * dt_s
    ti = (np.arange(n_t) - n_t / 2) * dt_i

    def f_time(shift_s, shift_i):
        es = np.exp(1j * np.outer(ts + shift_s, ns)) * dns
        ei = np.exp(1j * np.outer(ni, ti + shift_i)) * dni
        return es @ a @ ei / (2 * math.pi)

    f0 = f_time(0.0, 0.0)
    f1 = f_time(delay_s, delay_i)
    num = np.sum(f1 * np.conj(f0))
    den = np.sum(np.abs(f0) ** 2)
    return complex(num / den)


# --- relative spectral phase beyond first order --------------------------------------------


def _k_line(plate, branch, lams, direction_lab=None):
    return np.array([k0(plate, float(l), branch, direction_lab) for l in lams])


def relative_spectral_phase(setup: SourceSetup, grid: JtpaGrid, order="exact", ideal_pc_delay=None):
    """Phase of the HH path minus the VV path over the detuning grid, constant removed.

    ``order='exact'`` evaluates every segment's k(omega) from the dispersion
    data; ``order=1`` keeps only the linear (group-delay) part.
    ``ideal_pc_delay`` replaces the precompensator plate by a dispersion-free
    delay of the V pump (fs).
    """
    c1, c2 = setup.crystal1, setup.crystal2
    lp, ls, li = setup.triplet.lambda_p, setup.triplet.lambda_s, setup.triplet.lambda_i
    if order == 1:
        b = delay_budget(setup)
        tpc = b.tau_pc if ideal_pc_delay is None else ideal_pc_delay
        net_s = b.dt_dc_s - tpc + b.tau_sc_s
        net_i = b.dt_dc_i - tpc + b.tau_sc_i
        return -(grid.nu_s_axis[:, None] * net_s + grid.nu_i_axis[None, :] * net_i)
    if order != "exact":
        raise ArgumentError("order must be 'exact' or 1")
    dirs = daughter_directions(setup)
    ws = omega_of(ls) + grid.nu_s_axis
    wi = omega_of(li) + grid.nu_i_axis
    # pump detunings on the nu_s + nu_i lattice
    step = grid.nu_s_axis[1] - grid.nu_s_axis[0]
    if abs((grid.nu_i_axis[1] - grid.nu_i_axis[0]) - step) > 1e-12 * abs(step):
        raise ArgumentError("exact phase needs equal grid spacing on both axes")
    i0 = grid.nu_s_axis[0] + grid.nu_i_axis[0]
    m = len(grid.nu_s_axis) + len(grid.nu_i_axis) - 1
    nu_p = i0 + step * np.arange(m)
    lam_p = wavelength_of(omega_of(lp) + nu_p)

    d1, d2 = c1.thickness, c2.thickness
    pump = d1 / 2 * _k_line(c1, "fast", lam_p) - d1 * _k_line(c1, "slow", lam_p) - d2 / 2 * _k_line(c2, "fast", lam_p)
    pc = setup.precompensator
    if ideal_pc_delay is not None:
        pump = pump + ideal_pc_delay * nu_p
    elif pc is not None and pc.thickness > 0:
        b_v, b_h = _pol_branches(pc, lp)
        pump = pump + pc.thickness * (_k_line(pc, b_v, lam_p) - _k_line(pc, b_h, lam_p))

    def arm(lams, key, sc):
        v = d1 / 2 * _k_line(c1, "slow", lams, dirs[(key, 1, "slow")])
        v = v + d2 * _k_line(c2, "fast", lams, dirs[(key, 2, "fast")])
        v = v - d2 / 2 * _k_line(c2, "slow", lams, dirs[(key, 2, "slow")])
        if sc is not None and sc.thickness > 0:
            b_v, b_h = _pol_branches(sc, float(lams[len(lams) // 2]))
            v = v + sc.thickness * (_k_line(sc, b_h, lams) - _k_line(sc, b_v, lams))
        return v

    a_s = arm(wavelength_of(ws), "s", setup.sc_signal)
    a_i = arm(wavelength_of(wi), "i", setup.sc_idler)
    ns, ni = len(grid.nu_s_axis), len(grid.nu_i_axis)
    idx = np.arange(ns)[:, None] + np.arange(ni)[None, :]
    phi = pump[idx] + a_s[:, None] + a_i[None, :]
    # remove the value at zero detuning
    js = int(np.argmin(np.abs(grid.nu_s_axis)))
    ji = int(np.argmin(np.abs(grid.nu_i_axis)))
    return phi - phi[js, ji]


def source_visibility(setup: SourceSetup, grid: JtpaGrid | None = None, order=1, ideal_pc_delay=None, **grid_kw):
    """Visibility of the configured source.

    ``order=1`` uses the group-delay budget; ``order='exact'`` the full spectral phase.
    """
    g = grid if grid is not None else jtpa(setup, **grid_kw)
    phase = relative_spectral_phase(setup, g, order, ideal_pc_delay)
    w = np.abs(g.amplitude) ** 2
    total = _integrate2(w, g.nu_s_axis, g.nu_i_axis)
    e = np.exp(-1j * phase)
    return complex(_integrate2(w * e.real, g.nu_s_axis, g.nu_i_axis),
                   _integrate2(w * e.imag, g.nu_s_axis, g.nu_i_axis)) / total


# --- precompensator design -----------------------------------------------------------------


@dataclass
class PrecompDesign:
    length: float
    plate: CrystalPlate
    tau_pc: float
    budget: DelayBudget
    visibility: complex
    needs_postcompensator: bool

    def to_json(self) -> dict:
        return {
            "length_mm": self.length,
            "material": self.plate.material.name,
            "theta_deg": math.degrees(self.plate.theta_cut),
            "rotation_deg": math.degrees(self.plate.rotation),
            "tau_pc_fs": self.tau_pc,
            "budget": self.budget.to_json(),
            "abs_visibility": abs(self.visibility),
            "needs_postcompensator": self.needs_postcompensator,
        }


def design_precompensator(
    setup: SourceSetup,
    pc_material,
    pc_cut=math.pi / 2,
    pc_phi=0.0,
    grid: JtpaGrid | None = None,
    post_tol_fs=1.0,
) -> PrecompDesign:
    """Length (mm) and orientation of a pump precompensator for ``setup``.

    Equal arm delays give the closed form tau_pc = Delta t + tau_sc.  Unequal
    arms get the |v|-maximising compromise and a post-compensator flag.
    """
    lp = setup.triplet.lambda_p
    unit = CrystalPlate(pc_material, pc_cut, pc_phi, 1.0, "precompensator")
    per_mm = tau_pc(unit, lp)
    if not pc_material.is_birefringent or abs(per_mm) < 1e-9:
        raise CompensationError(f"{pc_material.name} gives no pump delay at this cut")
    if per_mm < 0:
        unit = unit.rotated(math.pi / 2)
        per_mm = -per_mm
    base = delay_budget(setup.with_(precompensator=None))
    target = base.target_pc
    if target < 0:
        unit = unit.rotated(math.pi / 2)
        per_mm = -per_mm
    length = target / per_mm
    spread = abs((base.dt_dc_s + base.tau_sc_s) - (base.dt_dc_i + base.tau_sc_i))
    needs_post = spread > post_tol_fs
    if needs_post:
        g = grid if grid is not None else jtpa(setup)

        def neg_vis(tpc):
            return -abs(visibility(g, base.dt_dc_s - tpc + base.tau_sc_s, base.dt_dc_i - tpc + base.tau_sc_i))

        from .spatialphase import _golden

        lo = min(base.dt_dc_s + base.tau_sc_s, base.dt_dc_i + base.tau_sc_i)
        hi = max(base.dt_dc_s + base.tau_sc_s, base.dt_dc_i + base.tau_sc_i)
        best = _golden(neg_vis, lo, hi, 1e-3)
        length = best / per_mm
    plate = replace(unit, thickness=abs(length))
    final = setup.with_(precompensator=plate)
    budget = delay_budget(final)
    g = grid if grid is not None else jtpa(final)
    v = visibility(g, budget.net_s, budget.net_i)
    return PrecompDesign(abs(length), plate, budget.tau_pc, budget, v, needs_post)


# --- tangle curves ---------------------------------------------------------------------------


@dataclass
class TangleCurve:
    delay_fs: np.ndarray
    tangle: np.ndarray
    budget: DelayBudget

    def peak(self):
        i = int(np.argmax(self.tangle))
        if 0 < i < len(self.tangle) - 1:
            y0, y1, y2 = self.tangle[i - 1 : i + 2]
            den = y0 - 2 * y1 + y2
            h = self.delay_fs[1] - self.delay_fs[0]
            if den != 0:
                return float(self.delay_fs[i] + 0.5 * h * (y0 - y2) / den)
        return float(self.delay_fs[i])

    def fwhm(self):
        """Full width at half the peak tangle (fs), by linear interpolation."""
        y, x = self.tangle, self.delay_fs
        half = 0.5 * y.max()
        i = int(np.argmax(y))
        left = np.nonzero(y[:i] < half)[0]
        right = np.nonzero(y[i:] < half)[0]
        if len(left) == 0 or len(right) == 0:
            raise NumericError("curve does not fall to half maximum inside the sweep", residual=float(y.min()))
        a = left[-1]
        xl = x[a] + (half - y[a]) * (x[a + 1] - x[a]) / (y[a + 1] - y[a])
        b = i + right[0]
        xr = x[b - 1] + (half - y[b - 1]) * (x[b] - x[b - 1]) / (y[b] - y[b - 1])
        return float(xr - xl)

    def to_csv(self) -> str:
        rows = ["delay_fs,tangle"] + [f"{d:.6f},{t:.12f}" for d, t in zip(self.delay_fs, self.tangle)]
        return "\n".join(rows) + "\n"

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "tangle_vs_delay",
            "delay_fs": [float(v) for v in self.delay_fs],
            "tangle": [float(v) for v in self.tangle],
            "peak_fs": self.peak(),
            "budget": self.budget.to_json(),
        }


def tangle_vs_delay(setup: SourceSetup, delays_fs, grid: JtpaGrid | None = None, filters=None) -> TangleCurve:
    """Tangle against the precompensator delay (existing precompensator ignored)."""
    from .qstate import concurrence_tangle, rho_temporal

    delays = np.asarray(delays_fs, dtype=float)
    if delays.size == 0:
        raise ArgumentError("delay list is empty")
    base = delay_budget(setup.with_(precompensator=None))
    g = grid if grid is not None else jtpa(setup)
    out = []
    for tpc in delays:
        v = visibility(g, base.dt_dc_s - tpc + base.tau_sc_s, base.dt_dc_i - tpc + base.tau_sc_i, filters)
        out.append(concurrence_tangle(rho_temporal(v))[1])
    return TangleCurve(delays, np.array(out), base)
