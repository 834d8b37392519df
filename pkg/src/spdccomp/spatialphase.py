"""Emission-direction dependent relative phase of the two-crystal source.

Sign convention: propagation through a segment contributes exp(-i k.L), so the
state behind the source is |HH> + exp(i phi)|VV> with

    phi = [phase of the HH path] - [phase of the VV path]

summed over both arms.  Pump legs are collimated and only add a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, CompensationError, DomainError
from .phasematch import CrystalPlate, emission_angle, internal_kz, plate_phase, vacuum_k
from .source import SourceSetup

SCHEMA_VERSION = 1


@dataclass
class PhaseComponents:
    """Per-arm phase terms in rad.

    phi_o: birth-crystal half-paths, HH (crystal 1) minus VV (crystal 2).
    phi_e: the crystal-1 photon crossing crystal 2 on the fast branch.
    phi_delta: free-space phase from its walkoff-displaced exit point.
    """

    phi_e: np.ndarray
    phi_o: np.ndarray
    phi_delta: np.ndarray

    @property
    def total(self):
        return self.phi_e + self.phi_o + self.phi_delta


def phi_components(crystal1: CrystalPlate, crystal2: CrystalPlate, kt, wavelength_nm) -> PhaseComponents:
    """Phase terms for a daughter with lab transverse wave vector ``kt`` (1/mm, shape (...,2))."""
    kt = np.asarray(kt, dtype=float)
    half1 = crystal1.thickness / 2
    half2 = crystal2.thickness / 2
    phi_o = internal_kz(crystal1, wavelength_nm, "slow", kt) * half1 - internal_kz(
        crystal2, wavelength_nm, "slow", kt
    ) * half2
    crossing = plate_phase(crystal2, wavelength_nm, "fast", kt)
    return PhaseComponents(phi_e=crossing.bulk, phi_o=phi_o, phi_delta=crossing.delta)


def phi_dc(setup: SourceSetup, kt, wavelength_nm):
    """Source relative phase for one arm (rad)."""
    return phi_components(setup.crystal1, setup.crystal2, kt, wavelength_nm).total


def phi_c(plate: CrystalPlate | None, kt, wavelength_nm):
    """Compensator phase: H-polarized minus V-polarized plane-wave phase through ``plate``."""
    kt = np.asarray(kt, dtype=float)
    if plate is None or plate.thickness == 0:
        return np.zeros(kt.shape[:-1])
    b_h = plate.branch_for("H", wavelength_nm)
    b_v = "slow" if b_h == "fast" else "fast"
    L = plate.thickness
    return (internal_kz(plate, wavelength_nm, b_h, kt) - internal_kz(plate, wavelength_nm, b_v, kt)) * L


# --- collection geometry ------------------------------------------------------------


@lru_cache(maxsize=256)
def _cone(crystal1, triplet, azimuth):
    return emission_angle(crystal1, triplet.lambda_p, triplet.lambda_s, azimuth)


def cone_angles(setup: SourceSetup):
    """External (signal, idler) cone half-angles along the configured emission azimuth."""
    return _cone(setup.crystal1, setup.triplet, float(setup.emission_azimuth))


def _frame(setup: SourceSetup):
    psi = setup.emission_azimuth
    radial = np.array([math.cos(psi), math.sin(psi)])
    tangential = np.array([-math.sin(psi), math.cos(psi)])
    return radial, tangential


def signal_iris_centre(setup: SourceSetup):
    a_s, _ = cone_angles(setup)
    radial, _ = _frame(setup)
    return setup.iris_distance * math.tan(a_s) * radial


def scan_direction(setup: SourceSetup):
    radial, tangential = _frame(setup)
    return radial if setup.scan_axis == "radial" else tangential


def paired_wavevectors(setup: SourceSetup, offsets):
    """Signal and idler transverse wave vectors for signal-iris offsets (...,2) in mm.

    The signal ray runs from the crystal to the offset point of the signal
    iris; the idler carries the opposite transverse momentum.
    """
    offsets = np.asarray(offsets, dtype=float)
    p = signal_iris_centre(setup) + offsets
    r = np.sqrt(np.sum(p * p, axis=-1) + setup.iris_distance**2)
    kt_s = vacuum_k(setup.triplet.lambda_s) * p / r[..., None]
    return kt_s, -kt_s


def total_phase(setup: SourceSetup, offsets, compensated=True):
    """Relative phase phi (rad) for signal-iris offsets, summed over both arms."""
    kt_s, kt_i = paired_wavevectors(setup, offsets)
    lam_s, lam_i = setup.triplet.lambda_s, setup.triplet.lambda_i
    phi = phi_dc(setup, kt_s, lam_s) + phi_dc(setup, kt_i, lam_i)
    if compensated:
        phi = phi + phi_c(setup.sc_signal, kt_s, lam_s) + phi_c(setup.sc_idler, kt_i, lam_i)
    return phi


def arm_phase(setup: SourceSetup, offsets, arm: str, compensated=True):
    """Phase contribution of one arm only ('signal' or 'idler')."""
    kt_s, kt_i = paired_wavevectors(setup, offsets)
    if arm == "signal":
        kt, lam, sc = kt_s, setup.triplet.lambda_s, setup.sc_signal
    elif arm == "idler":
        kt, lam, sc = kt_i, setup.triplet.lambda_i, setup.sc_idler
    else:
        raise ArgumentError(f"arm must be 'signal' or 'idler', got {arm!r}")
    phi = phi_dc(setup, kt, lam)
    if compensated:
        phi = phi + phi_c(sc, kt, lam)
    return phi


# --- phase maps ---------------------------------------------------------------------


def unwrap_nearest(phase):
    """Nearest-multiple-of-2pi continuation along the last axis."""
    return np.unwrap(np.asarray(phase, dtype=float))


@dataclass
class PhaseMap:
    plane_distance: float
    x: np.ndarray
    phase_deg: np.ndarray
    meta: dict = field(default_factory=dict)

    def slope(self) -> float:
        """Least-squares slope in deg/mm."""
        return float(np.polyfit(self.x, self.phase_deg, 1)[0])

    def variation(self, window=1.0, centre=0.0) -> float:
        """Peak-to-peak phase (deg) within ``window`` mm around ``centre``."""
        sel = np.abs(self.x - centre) <= window / 2 + 1e-12
        if np.count_nonzero(sel) < 2:
            raise ArgumentError("window contains fewer than two samples")
        p = self.phase_deg[sel]
        return float(p.max() - p.min())

    def to_csv(self) -> str:
        lines = ["x_mm,phase_deg"]
        lines += [f"{x:.6f},{p:.9f}" for x, p in zip(self.x, self.phase_deg)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "phase_map",
            "plane_distance_mm": self.plane_distance,
            "x_mm": [float(v) for v in self.x],
            "phase_deg": [float(v) for v in self.phase_deg],
            "slope_deg_per_mm": self.slope(),
            "meta": self.meta,
        }


def phase_map(setup: SourceSetup, halfwidth=3.0, n_samples=121, compensated=True, axis=None) -> PhaseMap:
    """Sampled relative phase along the scan axis of the signal iris plane.

    Signal offset +x pairs with the idler at the mirrored point.  The phase is
    referenced to its value at the cone centre so only variations remain.
    """
    if n_samples < 2:
        raise ArgumentError("n_samples must be >= 2")
    if not halfwidth > 0:
        raise ArgumentError("scan half-width must be positive")
    if axis is not None:
        setup = setup.with_(scan_axis=axis)
    x = np.linspace(-halfwidth, halfwidth, n_samples)
    u = scan_direction(setup)
    offsets = x[:, None] * u
    phi = total_phase(setup, offsets, compensated)
    step = np.max(np.abs(np.diff(phi))) if n_samples > 1 else 0.0
    if step >= math.pi / 2:
        raise DomainError("scan too coarse for unambiguous unwrapping; increase n_samples")
    phi = unwrap_nearest(phi)
    ref = float(total_phase(setup, np.zeros(2), compensated))
    centre_idx = int(np.argmin(np.abs(x)))
    phi = phi - phi[centre_idx] + (np.angle(np.exp(1j * (phi[centre_idx] - ref))))
    meta = {
        "lambda_p_nm": setup.triplet.lambda_p,
        "lambda_s_nm": setup.triplet.lambda_s,
        "lambda_i_nm": setup.triplet.lambda_i,
        "compensated": bool(compensated),
        "scan_axis": setup.scan_axis,
        "global_phase_deg": math.degrees(ref),
        "setup_hash": setup.digest(),
    }
    return PhaseMap(setup.iris_distance, x, np.degrees(phi), meta)


def improvement_factor(setup: SourceSetup, window=1.0, n_samples=201) -> float:
    """Ratio of uncompensated to compensated peak-to-peak phase over ``window`` mm."""
    raw = phase_map(setup, window / 2, n_samples, compensated=False).variation(window)
    comp = phase_map(setup, window / 2, n_samples, compensated=True).variation(window)
    return raw / comp if comp > 0 else math.inf


# --- iris sampling ------------------------------------------------------------------


def iris_offsets(diameter, n_radial=12):
    """Uniform-area grid of offsets inside a circular iris, equal weights."""
    if diameter < 0:
        raise ArgumentError("iris diameter must be >= 0")
    if diameter == 0:
        return np.zeros((1, 2)), np.ones(1)
    r = diameter / 2
    n = 2 * n_radial + 1
    g = np.linspace(-r, r, n)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    inside = xx**2 + yy**2 <= r * r * (1 + 1e-12)
    pts = np.stack([xx[inside], yy[inside]], axis=-1)
    return pts, np.full(len(pts), 1.0 / len(pts))


def iris_phases(setup: SourceSetup, diameter=None, compensated=True, n_radial=12):
    """Relative phases and weights over the signal iris (idler iris catches the partners)."""
    d = setup.iris_diameter if diameter is None else diameter
    pts, w = iris_offsets(d, n_radial)
    return total_phase(setup, pts, compensated), w


# --- compensator design --------------------------------------------------------------


def _golden(f, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def _arm_even_phase(setup, arm, kt, lam):
    """Even part in k_t of one arm's source phase.

    The odd part cancels against the partner arm at degeneracy, so each
    compensator only needs to flatten the even part of its own arm.
    """
    c1, c2 = setup.crystal1, setup.crystal2
    return 0.5 * (phi_components(c1, c2, kt, lam).total + phi_components(c1, c2, -kt, lam).total)


def _arm_line(setup, arm, diameter, n=41):
    x = np.linspace(-diameter / 2, diameter / 2, n)
    kt_s, kt_i = paired_wavevectors(setup, x[:, None] * scan_direction(setup))
    if arm == "signal":
        return kt_s, setup.triplet.lambda_s
    return kt_i, setup.triplet.lambda_i


def compensator_plate(material, cut, thickness, arm, orientation=0.0, phi_cut=0.0):
    role = "spatial_comp_signal" if arm == "signal" else "spatial_comp_idler"
    return CrystalPlate(material, cut, phi_cut, thickness, role, orientation)


def design_spatial_compensator(
    setup: SourceSetup,
    comp_material,
    comp_cut,
    arm="signal",
    orientation=None,
    diameter=None,
    max_thickness=5.0,
    tol=1e-4,
    phi_cut=0.0,
):
    """Compensator thickness (mm) flattening one arm's phase across the iris.

    Minimises the RMS of (even source phase + compensator phase) along the scan
    line over the iris diameter by golden-section search (``tol`` in mm).
    ``orientation`` (rad about the beam) defaults to the setup's existing
    compensator for that arm, else to the quarter turn (0, 90, 180, 270 deg)
    whose phase slope opposes the source most strongly.  Returns (thickness, plate).
    """
    if arm not in ("signal", "idler"):
        raise ArgumentError(f"arm must be 'signal' or 'idler', got {arm!r}")
    if orientation is None:
        existing = setup.sc_signal if arm == "signal" else setup.sc_idler
        if existing is not None:
            orientation = existing.rotation
    if setup.crystal1.thickness == 0 and setup.crystal2.thickness == 0:
        return 0.0, compensator_plate(comp_material, comp_cut, 0.0, arm, orientation or 0.0, phi_cut)
    d = setup.iris_diameter if diameter is None else diameter
    kt, lam = _arm_line(setup, arm, max(d, 0.2))
    src = _arm_even_phase(setup, arm, kt, lam)
    src_slope = src[-1] - src[0]
    candidates = [orientation] if orientation is not None else [0.0, math.pi / 2, math.pi, 1.5 * math.pi]
    # default: the quarter turn whose slope opposes the source most strongly (thinnest plate)
    usable = []
    for ang in candidates:
        unit = phi_c(compensator_plate(comp_material, comp_cut, 1e-3, arm, ang, phi_cut), kt, lam)
        unit_slope = unit[-1] - unit[0]
        if src_slope * unit_slope < 0:
            usable.append((abs(unit_slope), -len(usable), ang, unit_slope))
    if not usable:
        raise CompensationError(
            "cannot compensate with this cut: compensator phase slope has the same sign as the source"
        )
    _, _, ang, unit_slope = max(usable)
    hi = min(max_thickness, 3e-3 * abs(src_slope / unit_slope) + 1e-3)

    def cost(t):
        plate = compensator_plate(comp_material, comp_cut, t, arm, ang, phi_cut)
        return float(np.std(src + phi_c(plate, kt, lam)))

    t = _golden(cost, 0.0, hi, tol)
    best = (t, ang, cost(t))
    t, ang, _ = best
    return float(t), compensator_plate(comp_material, comp_cut, float(t), arm, ang, phi_cut)


def arm_rms(setup: SourceSetup, arm, plate, diameter=None):
    """Objective used by the designer: RMS (rad) of even source phase plus ``plate`` phase."""
    d = setup.iris_diameter if diameter is None else diameter
    kt, lam = _arm_line(setup, arm, max(d, 0.2))
    return float(np.std(_arm_even_phase(setup, arm, kt, lam) + phi_c(plate, kt, lam)))
