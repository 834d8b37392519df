"""Cut plates, plane-wave propagation through them, and type-I phasematching.

Lab frame: z is the pump axis and the plate normal, x is vertical (V), y is
horizontal (H).  A plate cut at (theta, phi) has its normal along the optical-
frame direction (sin t cos p, sin t sin p, cos t).  In the as-cut orientation
the lab x axis is the in-face direction pointing towards the optical z axis,
so for a uniaxial crystal the optic axis leans towards +x.  ``rotation``
turns the plate about the pump axis.

Type-I convention: the pump travels on the fast branch and both daughters on
the slow branch.  For a negative uniaxial crystal such as BBO that is the
usual e -> o + o; for BiBO cut in the yz plane it is the x-polarized pump
producing in-plane polarized pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ArgumentError, DomainError, NotPhasematchableError, NumericError
from .materials import Material, ray_direction, solve_modes

TWO_PI = 2 * math.pi
ROLES = (
    "dc_crystal_1",
    "dc_crystal_2",
    "spatial_comp_signal",
    "spatial_comp_idler",
    "precompensator",
    "plate",
)
KZ_TOL = 1e-14


def vacuum_k(wavelength_nm):
    """2 pi / lambda in 1/mm."""
    return TWO_PI / (np.asarray(wavelength_nm, dtype=float) * 1e-6)


@dataclass(frozen=True)
class CrystalPlate:
    material: Material
    theta_cut: float
    phi_cut: float
    thickness: float
    role: str = "plate"
    rotation: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.thickness) and self.thickness >= 0):
            raise ArgumentError(f"thickness must be >= 0 mm, got {self.thickness}")
        if self.role not in ROLES:
            raise ArgumentError(f"unknown plate role {self.role!r}")
        for v in (self.theta_cut, self.phi_cut, self.rotation):
            if not math.isfinite(v):
                raise ArgumentError("plate angles must be finite")

    def rotated(self, angle: float) -> "CrystalPlate":
        return replace(self, rotation=self.rotation + angle)

    def with_thickness(self, thickness: float) -> "CrystalPlate":
        return replace(self, thickness=float(thickness))

    @cached_property
    def crystal_from_lab(self) -> np.ndarray:
        t, p = self.theta_cut, self.phi_cut
        z_p = np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])
        x_p = np.array([-math.cos(t) * math.cos(p), -math.cos(t) * math.sin(p), math.sin(t)])
        y_p = np.cross(z_p, x_p)
        plate = np.column_stack([x_p, y_p, z_p])
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        rz_inv = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
        return plate @ rz_inv

    def to_crystal(self, v_lab):
        return np.asarray(v_lab, dtype=float) @ self.crystal_from_lab.T

    def to_lab(self, v_crys):
        return np.asarray(v_crys, dtype=float) @ self.crystal_from_lab

    def eta(self, wavelength_nm):
        return 1.0 / self.material.principal_eps(wavelength_nm)[0]

    def normal_modes(self, wavelength_nm):
        """Fast and slow D polarizations (lab frame) for propagation along the normal."""
        m = solve_modes(self.eta(wavelength_nm), self.to_crystal([0.0, 0.0, 1.0]))
        return self.to_lab(m.d), m.n

    def branch_for(self, polarization: str, wavelength_nm) -> str:
        """'fast' or 'slow': the eigenmode closest to lab ``polarization`` ('H' or 'V')."""
        pol = polarization.upper()
        if pol not in ("H", "V"):
            raise ArgumentError(f"polarization must be 'H' or 'V', got {polarization!r}")
        d, _ = self.normal_modes(wavelength_nm)
        fast_is_v = abs(d[0, 0]) >= abs(d[0, 1])
        return "fast" if (pol == "V") == fast_is_v else "slow"


def orient_for_vertical_pump(plate: CrystalPlate, pump_nm: float) -> CrystalPlate:
    """Rotate by 90 deg if needed so that the vertically polarized pump is on the fast branch."""
    if plate.branch_for("V", pump_nm) == "fast":
        return plate
    return plate.rotated(math.pi / 2)


# --- plane-wave propagation -------------------------------------------------------


def _as_transverse(kt):
    kt = np.asarray(kt, dtype=float)
    if kt.shape[-1] != 2:
        raise ArgumentError("transverse wave vectors must have 2 components")
    return kt


def internal_kz(plate: CrystalPlate, wavelength_nm, branch: str, kt):
    """Longitudinal wavenumber inside ``plate`` for lab transverse wave vector ``kt`` (...,2) in 1/mm.

    Tangential momentum is continuous across the faces, so the internal wave
    has the same ``kt``; ``k_z`` then solves |k| = k0 n(k_hat) by fixed-point
    iteration, which contracts quickly because n varies slowly with direction.
    """
    kt = _as_transverse(kt)
    j = 0 if branch == "fast" else 1
    if branch not in ("fast", "slow"):
        raise ArgumentError(f"branch must be 'fast' or 'slow', got {branch!r}")
    k0 = vacuum_k(wavelength_nm)
    eta = plate.eta(wavelength_nm)
    kt2 = np.sum(kt * kt, axis=-1)
    kz = np.sqrt(np.maximum(k0**2 * np.max(1 / eta) - kt2, 0.0))
    for _ in range(200):
        kvec = np.concatenate([kt, kz[..., None]], axis=-1)
        n = solve_modes(eta, plate.to_crystal(kvec)).n[..., j]
        arg = (k0 * n) ** 2 - kt2
        if np.any(arg <= 0):
            raise DomainError("evanescent geometry: transverse k exceeds k0*n")
        new = np.sqrt(arg)
        if np.all(np.abs(new - kz) <= KZ_TOL * new):
            return new
        kz = new
    raise NumericError("k_z fixed point did not converge", residual=float(np.max(np.abs(new - kz))))


@dataclass
class PlatePhase:
    """Plane-wave phase through one plate.

    ``bulk`` is the phase k.r along the walked-off ray up to its exit point,
    referenced to where a walkoff-free ray would exit; ``delta`` is the extra
    free-space phase from the lateral walkoff displacement.  They sum to
    ``kz * thickness``.
    """

    bulk: np.ndarray
    delta: np.ndarray
    kz: np.ndarray
    walkoff: np.ndarray
    ray: np.ndarray

    @property
    def total(self):
        return self.bulk + self.delta


def plate_phase(plate: CrystalPlate, wavelength_nm, branch: str, kt) -> PlatePhase:
    kt = _as_transverse(kt)
    L = plate.thickness
    kz = internal_kz(plate, wavelength_nm, branch, kt)
    kvec = np.concatenate([kt, kz[..., None]], axis=-1)
    khat = kvec / np.linalg.norm(kvec, axis=-1, keepdims=True)
    s_lab = plate.to_lab(ray_direction(plate.material, wavelength_nm, branch, plate.to_crystal(khat)))
    exit_point = L * s_lab / s_lab[..., 2:3]
    walkfree_t = L * kt / kz[..., None]
    shift = exit_point[..., :2] - walkfree_t
    bulk = np.sum(kvec * exit_point, axis=-1) - np.sum(kt * walkfree_t, axis=-1)
    delta = -np.sum(kt * shift, axis=-1)
    walkoff = np.arccos(np.clip(np.sum(khat * s_lab, axis=-1), -1.0, 1.0))
    return PlatePhase(bulk=bulk, delta=delta, kz=kz, walkoff=walkoff, ray=s_lab)


def internal_direction(plate: CrystalPlate, wavelength_nm, branch, kt):
    """Unit internal wave vector (lab frame) for transverse ``kt``."""
    kt = _as_transverse(kt)
    kz = internal_kz(plate, wavelength_nm, branch, kt)
    kvec = np.concatenate([kt, kz[..., None]], axis=-1)
    return kvec / np.linalg.norm(kvec, axis=-1, keepdims=True)


def external_kt(wavelength_nm, half_angle, azimuth):
    """Transverse wave vector of a vacuum wave at ``half_angle`` from z, azimuth from lab x."""
    k0 = vacuum_k(wavelength_nm)
    s = k0 * np.sin(half_angle)
    return np.stack([s * np.cos(azimuth), s * np.sin(azimuth)], axis=-1)


# --- phasematching ------------------------------------------------------------------


@dataclass(frozen=True)
class SpdcTriplet:
    lambda_p: float
    lambda_s: float
    lambda_i: float

    def __post_init__(self):
        for v in (self.lambda_p, self.lambda_s, self.lambda_i):
            if not (math.isfinite(v) and v > 0):
                raise ArgumentError("wavelengths must be positive")
        lhs = 1 / self.lambda_p
        rhs = 1 / self.lambda_s + 1 / self.lambda_i
        if abs(lhs - rhs) > 1e-12 * lhs:
            raise ArgumentError(
                f"energy not conserved: 1/{self.lambda_p} != 1/{self.lambda_s} + 1/{self.lambda_i}"
            )

    @classmethod
    def from_pump_signal(cls, lambda_p, lambda_s):
        if lambda_s <= lambda_p:
            raise ArgumentError("signal wavelength must exceed the pump wavelength")
        return cls(float(lambda_p), float(lambda_s), 1.0 / (1.0 / lambda_p - 1.0 / lambda_s))

    @property
    def degenerate(self) -> bool:
        return abs(self.lambda_s - self.lambda_i) <= 1e-12 * self.lambda_s


def pump_kz(plate: CrystalPlate, lambda_p):
    return float(internal_kz(plate, lambda_p, "fast", np.zeros(2)))


def mismatch_q(plate: CrystalPlate, triplet: SpdcTriplet, q, azimuth=0.0):
    """k_p,z - k_s,z - k_i,z with signal transverse momentum q along ``azimuth`` and idler opposite."""
    q = np.asarray(q, dtype=float)
    u = np.array([math.cos(azimuth), math.sin(azimuth)])
    kt = q[..., None] * u
    ks = internal_kz(plate, triplet.lambda_s, "slow", kt)
    ki = internal_kz(plate, triplet.lambda_i, "slow", -kt)
    return pump_kz(plate, triplet.lambda_p) - ks - ki


def phasematch_mismatch(plate: CrystalPlate, triplet: SpdcTriplet, signal_internal_angle, azimuth=0.0):
    """Longitudinal mismatch (1/mm) for a signal wave vector at ``signal_internal_angle`` from z.

    The idler carries the opposite transverse momentum.
    """
    ang = np.asarray(signal_internal_angle, dtype=float)
    khat = np.stack(
        [np.sin(ang) * math.cos(azimuth), np.sin(ang) * math.sin(azimuth), np.cos(ang)], axis=-1
    )
    n = solve_modes(plate.eta(triplet.lambda_s), plate.to_crystal(khat)).n[..., 1]
    q = vacuum_k(triplet.lambda_s) * n * np.sin(ang)
    return mismatch_q(plate, triplet, q, azimuth)


def _q_limit(triplet):
    return 0.999 * min(vacuum_k(triplet.lambda_s), vacuum_k(triplet.lambda_i))


def solve_transverse_q(plate, triplet, azimuth=0.0, n_scan=400):
    """Smallest q > 0 with zero mismatch (collinear root returns 0)."""
    qmax = _q_limit(triplet)
    f0 = float(mismatch_q(plate, triplet, 0.0, azimuth))
    if abs(f0) < 1e-10:
        return 0.0
    qs = np.linspace(0.0, qmax, n_scan)
    fs = mismatch_q(plate, triplet, qs, azimuth)
    idx = np.nonzero(np.sign(fs[1:]) != np.sign(fs[:-1]))[0]
    if len(idx) == 0:
        best = int(np.argmin(np.abs(fs)))
        best_angle = float(np.arcsin(qs[best] / vacuum_k(triplet.lambda_s)))
        raise NotPhasematchableError(
            f"no phasematched emission for {plate.material.name} at theta="
            f"{math.degrees(plate.theta_cut):.3f} deg",
            best_angle=best_angle,
            residual=float(fs[best]),
        )
    i = idx[0]
    g = lambda x: float(mismatch_q(plate, triplet, x, azimuth))
    q = brentq(g, qs[i], qs[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = g(q)
    if abs(res) > 1e-9:
        raise NumericError("phasematching root not converged", residual=res)
    return q


def emission_angle(plate: CrystalPlate, lambda_p, lambda_s, azimuth=0.0):
    """External cone half-angles (signal, idler) in rad for emission along ``azimuth`` (lab)."""
    triplet = SpdcTriplet.from_pump_signal(lambda_p, lambda_s)
    q = solve_transverse_q(plate, triplet, azimuth)
    a_s = math.asin(q / vacuum_k(triplet.lambda_s))
    a_i = math.asin(q / vacuum_k(triplet.lambda_i))
    return a_s, a_i


def solve_cut_angle(
    material: Material,
    phi_cut,
    lambda_p,
    lambda_s,
    target_external_half_angle,
    guess=None,
    azimuth=0.0,
    n_scan=721,
):
    """Cut angle theta (rad) whose signal cone has the requested external half-angle.

    ``azimuth`` is measured in the as-cut plate frame.  When several cuts work,
    the one nearest ``guess`` is returned (smallest theta if no guess).
    """
    triplet = SpdcTriplet.from_pump_signal(lambda_p, lambda_s)
    target = float(target_external_half_angle)
    q = vacuum_k(triplet.lambda_s) * math.sin(target)
    if q >= _q_limit(triplet):
        raise ArgumentError("target half-angle does not leave the crystal")

    def f(theta):
        plate = CrystalPlate(material, theta, phi_cut, 1.0)
        try:
            return float(mismatch_q(plate, triplet, q, azimuth))
        except DomainError:
            return math.nan

    thetas = np.linspace(1e-4, math.pi - 1e-4, n_scan)
    fs = np.array([f(t) for t in thetas])
    roots = []
    for a, b, fa, fb in zip(thetas[:-1], thetas[1:], fs[:-1], fs[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and np.sign(fa) != np.sign(fb):
            roots.append(brentq(f, a, b, xtol=1e-14, maxiter=200))
    if not roots:
        angles = []
        for t in thetas[:: max(1, n_scan // 90)]:
            try:
                angles.append(emission_angle(CrystalPlate(material, t, phi_cut, 1.0), lambda_p, lambda_s, azimuth)[0])
            except DomainError:
                pass
        span = (min(angles), max(angles)) if angles else (math.nan, math.nan)
        raise DomainError(
            f"no cut of {material.name} at phi={math.degrees(phi_cut):.1f} deg gives "
            f"{math.degrees(target):.3f} deg; attainable range ~ "
            f"[{math.degrees(span[0]):.3f}, {math.degrees(span[1]):.3f}] deg"
        )
    ref = roots[0] if guess is None else guess
    return min(roots, key=lambda r: abs(r - ref))
