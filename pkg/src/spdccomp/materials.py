"""Dispersion database and index solvers for isotropic, uniaxial and biaxial media.

Units: wavelengths in nm at the interface (Sellmeier formulas take um),
time in fs, length in mm, angles in rad.

Every anisotropic evaluation goes through the same eigenproblem: the
impermeability tensor ``eta = diag(1/n_x^2, 1/n_y^2, 1/n_z^2)`` projected onto
the plane normal to the wave vector.  Its two eigenvalues are ``1/n^2`` of the
fast and slow modes and its eigenvectors are the D-field polarizations.  This
is algebraically the Fresnel equation of wave normals, but it also hands back
the polarizations needed for walkoff and the first/second order perturbation
formulas that give analytic wavelength derivatives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DomainError

C_MM_PER_FS = 2.99792458e-4  # speed of light
C_NM_PER_FS = 299.792458

FORMULAS = ("sellmeier", "single_pole", "constant")


@dataclass(frozen=True)
class AxisDispersion:
    """Dispersion law for one principal axis.

    ``sellmeier``:   n^2 = A + sum_i B_i L / (L - C_i)     coeffs (A, B1, C1, B2, C2, ...)
    ``single_pole``: n^2 = A + B / (L - C) - D L            coeffs (A, B, C, D)
    ``constant``:    n^2 = A                                coeffs (A,)

    with L = wavelength^2 in um^2.
    """

    formula: str
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise ArgumentError(f"unknown dispersion formula {self.formula!r}")
        n = len(self.coefficients)
        ok = {
            "sellmeier": n >= 1 and n % 2 == 1,
            "single_pole": n == 4,
            "constant": n == 1,
        }[self.formula]
        if not ok:
            raise ArgumentError(f"{n} coefficients do not fit formula {self.formula!r}")

    def _g(self, L):
        """n^2 and its first two derivatives with respect to L."""
        c = self.coefficients
        L = np.asarray(L, dtype=float)
        if self.formula == "constant":
            return np.full_like(L, c[0]), np.zeros_like(L), np.zeros_like(L)
        if self.formula == "single_pole":
            A, B, C, D = c
            q = L - C
            return A + B / q - D * L, -B / q**2 - D, 2 * B / q**3
        g = np.full_like(L, c[0])
        g1 = np.zeros_like(L)
        g2 = np.zeros_like(L)
        for B, C in zip(c[1::2], c[2::2]):
            q = L - C
            g = g + B * L / q
            g1 = g1 - B * C / q**2
            g2 = g2 + 2 * B * C / q**3
        return g, g1, g2

    def eps(self, wavelength_um):
        """Return (n^2, d n^2/d lambda, d^2 n^2/d lambda^2) with lambda in um."""
        lam = np.asarray(wavelength_um, dtype=float)
        g, g1, g2 = self._g(lam * lam)
        return g, 2 * lam * g1, 2 * g1 + 4 * lam * lam * g2

    def index(self, wavelength_um):
        return np.sqrt(self.eps(wavelength_um)[0])


@dataclass(frozen=True)
class Material:
    """A named optical medium.

    ``axes`` holds one law (isotropic), two laws ``(ordinary, extraordinary)``
    (uniaxial, optic axis = crystal z) or three laws ``(x, y, z)`` (biaxial,
    labelled so that n_x <= n_y <= n_z).
    """

    name: str
    symmetry: str
    axes: tuple[AxisDispersion, ...]
    transparency_nm: tuple[float, float]
    citation: str = ""
    notes: str = ""

    def __post_init__(self):
        expected = {"isotropic": 1, "uniaxial": 2, "biaxial": 3}
        if self.symmetry not in expected:
            raise ArgumentError(f"unknown symmetry {self.symmetry!r}")
        if len(self.axes) != expected[self.symmetry]:
            raise ArgumentError(
                f"{self.symmetry} material needs {expected[self.symmetry]} axis laws"
            )
        lo, hi = self.transparency_nm
        if not 0 < lo < hi:
            raise ArgumentError("transparency range must satisfy 0 < lo < hi")

    @property
    def is_birefringent(self) -> bool:
        return self.symmetry != "isotropic"

    def check_wavelength(self, wavelength_nm, margin_nm=0.0):
        wl = np.asarray(wavelength_nm, dtype=float)
        if not np.all(np.isfinite(wl)) or np.any(wl <= 0):
            raise ArgumentError(f"wavelength must be positive and finite, got {wavelength_nm}")
        lo, hi = self.transparency_nm
        if np.any(wl - margin_nm < lo) or np.any(wl + margin_nm > hi):
            raise DomainError(
                f"{self.name}: wavelength {wavelength_nm} nm outside "
                f"[{lo + margin_nm}, {hi - margin_nm}] nm"
            )

    def principal_eps(self, wavelength_nm):
        """Principal permittivities (3,) plus first and second lambda-derivatives (per nm)."""
        self.check_wavelength(wavelength_nm)
        lam_um = float(wavelength_nm) * 1e-3
        vals = [ax.eps(lam_um) for ax in self.axes]
        if self.symmetry == "isotropic":
            vals = vals * 3
        elif self.symmetry == "uniaxial":
            vals = [vals[0], vals[0], vals[1]]
        e0 = np.array([float(v[0]) for v in vals])
        e1 = np.array([float(v[1]) for v in vals]) * 1e-3
        e2 = np.array([float(v[2]) for v in vals]) * 1e-6
        return e0, e1, e2

    def principal_indices(self, wavelength_nm) -> np.ndarray:
        return np.sqrt(self.principal_eps(wavelength_nm)[0])

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "symmetry": self.symmetry,
            "axes": [
                {"formula": ax.formula, "coefficients": list(ax.coefficients)}
                for ax in self.axes
            ],
            "transparency_nm": list(self.transparency_nm),
            "citation": self.citation,
            "notes": self.notes,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Material":
        return cls(
            name=rec["name"],
            symmetry=rec["symmetry"],
            axes=tuple(
                AxisDispersion(a["formula"], tuple(float(x) for x in a["coefficients"]))
                for a in rec["axes"]
            ),
            transparency_nm=tuple(float(x) for x in rec["transparency_nm"]),
            citation=rec.get("citation", ""),
            notes=rec.get("notes", ""),
        )


def constant_material(name, n_values, symmetry=None, transparency_nm=(100.0, 10000.0)):
    """Non-dispersive medium, mostly for tests.  ``n_values`` is a float or one per axis."""
    vals = np.atleast_1d(np.asarray(n_values, dtype=float))
    if symmetry is None:
        symmetry = {1: "isotropic", 2: "uniaxial", 3: "biaxial"}[len(vals)]
    axes = tuple(AxisDispersion("constant", (float(v) ** 2,)) for v in vals)
    return Material(name, symmetry, axes, tuple(transparency_nm), "synthetic")


# --- database -----------------------------------------------------------------

SCHEMA_VERSION = 1


def default_materials_path() -> Path:
    return Path(str(resources.files("spdccomp") / "data" / "materials.json"))


def dump_materials(materials) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "materials": [m.to_record() for m in materials.values()],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def save_materials(materials, path):
    Path(path).write_text(dump_materials(materials), encoding="utf-8")


def parse_materials(text: str) -> dict[str, Material]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ArgumentError(f"unsupported materials schema {doc.get('schema_version')!r}")
    out = {}
    for rec in doc["materials"]:
        m = Material.from_record(rec)
        if m.name in out:
            raise ArgumentError(f"duplicate material {m.name!r}")
        out[m.name] = m
    return out


_CACHE: dict[str, dict[str, Material]] = {}


def load_materials(path=None) -> dict[str, Material]:
    path = Path(path) if path is not None else default_materials_path()
    key = str(path.resolve())
    if key not in _CACHE:
        _CACHE[key] = parse_materials(path.read_text(encoding="utf-8"))
    return dict(_CACHE[key])


def get_material(name: str, path=None) -> Material:
    mats = load_materials(path)
    for key, m in mats.items():
        if key.lower() == str(name).lower():
            return m
    raise DomainError(f"unknown material {name!r}; known: {', '.join(sorted(mats))}")


# --- geometry helpers ---------------------------------------------------------


def direction_from_angles(theta, phi=0.0) -> np.ndarray:
    """Unit vector at polar angle ``theta`` from z and azimuth ``phi`` from x."""
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def _unit(v, what="direction"):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3 or not np.all(np.isfinite(v)):
        raise ArgumentError(f"{what} must be finite 3-vectors")
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ArgumentError(f"{what} must be nonzero")
    return v / norm


def _transverse_basis(k):
    """Two unit vectors spanning the plane normal to each unit vector in ``k`` (...,3)."""
    helper = np.where(
        (np.abs(k[..., 0]) < 0.9)[..., None], np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    )
    a = np.cross(k, helper)
    a /= np.linalg.norm(a, axis=-1, keepdims=True)
    b = np.cross(k, a)
    return a, b


@dataclass
class Modes:
    """Eigenmodes of a direction: index 0 = fast, 1 = slow.  Shapes broadcast over ``k``."""

    k: np.ndarray  # (...,3) unit wave vector in crystal frame
    u: np.ndarray  # (...,2) 1/n^2
    d: np.ndarray  # (...,2,3) unit D polarization
    eta: np.ndarray = field(repr=False)  # (3,) principal impermeabilities

    @property
    def n(self):
        return 1.0 / np.sqrt(self.u)


def solve_modes(eta, k) -> Modes:
    """Diagonalise the projected impermeability for unit vectors ``k`` (...,3)."""
    k = _unit(k)
    a, b = _transverse_basis(k)
    eta = np.asarray(eta, dtype=float)
    maa = np.sum(a * a * eta, axis=-1)
    mbb = np.sum(b * b * eta, axis=-1)
    mab = np.sum(a * b * eta, axis=-1)
    half_tr = 0.5 * (maa + mbb)
    half_diff = 0.5 * (maa - mbb)
    rad = np.hypot(half_diff, mab)
    u_fast = half_tr + rad  # larger 1/n^2 -> smaller n
    u_slow = half_tr - rad
    # eigenvector of the larger eigenvalue, by half-angle rotation (stable at degeneracy)
    ang = 0.5 * np.arctan2(mab, half_diff)
    ca, sa = np.cos(ang)[..., None], np.sin(ang)[..., None]
    d_fast = ca * a + sa * b
    d_slow = -sa * a + ca * b
    return Modes(
        k=k,
        u=np.stack([u_fast, u_slow], axis=-1),
        d=np.stack([d_fast, d_slow], axis=-2),
        eta=eta,
    )


BRANCHES = {"fast": 0, "slow": 1}


def branch_index(branch) -> int:
    if branch in (0, 1):
        return int(branch)
    try:
        return BRANCHES[str(branch).lower()]
    except KeyError:
        raise ArgumentError(f"branch must be 'fast' or 'slow', got {branch!r}") from None


def uniaxial_branch(material: Material, branch: str) -> str:
    """Translate 'o'/'e' into 'fast'/'slow' for a uniaxial material at any wavelength."""
    b = str(branch).lower()
    if b in ("fast", "slow"):
        return b
    if b not in ("o", "e", "ordinary", "extraordinary"):
        raise ArgumentError(f"unknown branch {branch!r}")
    lo, hi = material.transparency_nm
    n_o, _, n_e = material.principal_indices(math.sqrt(lo * hi))
    negative = n_e < n_o
    ordinary = b in ("o", "ordinary")
    return "slow" if ordinary == negative else "fast"


def _modes_and_derivatives(material: Material, wavelength_nm, direction):
    """Index of both modes along ``direction`` with analytic d/d lambda and d2/d lambda2 (per nm)."""
    e0, e1, e2 = material.principal_eps(wavelength_nm)
    eta = 1.0 / e0
    eta1 = -e1 / e0**2
    eta2 = 2 * e1**2 / e0**3 - e2 / e0**2
    m = solve_modes(eta, direction)
    d = m.d
    # Hellmann-Feynman for first order, standard second-order perturbation for the curvature
    u1 = np.einsum("...mi,i,...mi->...m", d, eta1, d)
    cross = np.einsum("...i,i,...i->...", d[..., 0, :], eta1, d[..., 1, :])
    gap = m.u[..., 0] - m.u[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        pert = np.where(np.abs(gap) > 1e-14, 2 * cross**2 / gap, 0.0)
    u2 = np.einsum("...mi,i,...mi->...m", d, eta2, d) + np.stack([pert, -pert], axis=-1)
    n = 1.0 / np.sqrt(m.u)
    n1 = -0.5 * n**3 * u1
    n2 = 0.75 * n**5 * u1**2 - 0.5 * n**3 * u2
    return m, n, n1, n2


# --- public operations --------------------------------------------------------


def _check_angle(x, what):
    if not np.all(np.isfinite(x)):
        raise ArgumentError(f"{what} must be finite")


def index_uniaxial(material: Material, wavelength_nm, branch, theta_k):
    """Index of a uniaxial crystal on the 'o' or 'e' branch at polar angle ``theta_k`` from the optic axis."""
    if material.symmetry != "uniaxial":
        raise ArgumentError(f"{material.name} is not uniaxial")
    _check_angle(theta_k, "theta_k")
    n_o, _, n_e = material.principal_indices(wavelength_nm)
    b = str(branch).lower()
    if b in ("o", "ordinary"):
        return float(n_o) + 0.0 * np.asarray(theta_k, dtype=float)
    if b in ("e", "extraordinary"):
        ct, st = np.cos(theta_k), np.sin(theta_k)
        return 1.0 / np.sqrt(ct**2 / n_o**2 + st**2 / n_e**2)
    raise ArgumentError(f"uniaxial branch must be 'o' or 'e', got {branch!r}")


def index_biaxial(material: Material, wavelength_nm, direction):
    """(n_fast, n_slow) along ``direction`` in the optical frame.  Works for any symmetry."""
    k = _unit(direction)
    m = solve_modes(1.0 / material.principal_eps(wavelength_nm)[0], k)
    n = m.n
    return n[..., 0], n[..., 1]


def _resolve(material, branch, direction, theta_k):
    if direction is None:
        if theta_k is None:
            raise ArgumentError("give either a direction or theta_k")
        _check_angle(theta_k, "theta_k")
        direction = direction_from_angles(theta_k)
    if material.symmetry == "uniaxial":
        branch = uniaxial_branch(material, branch)
    return branch_index(branch), _unit(direction)


def index_derivatives(material: Material, wavelength_nm, branch, direction=None, theta_k=None):
    """(n, dn/dlambda [1/nm], d2n/dlambda2 [1/nm^2]) at fixed direction."""
    j, k = _resolve(material, branch, direction, theta_k)
    _, n, n1, n2 = _modes_and_derivatives(material, wavelength_nm, k)
    return n[..., j], n1[..., j], n2[..., j]


def group_index(material: Material, wavelength_nm, branch, direction=None, theta_k=None):
    material.check_wavelength(wavelength_nm, margin_nm=1.0)
    n, n1, _ = index_derivatives(material, wavelength_nm, branch, direction, theta_k)
    return n - float(wavelength_nm) * n1


def group_velocity(material: Material, wavelength_nm, branch, direction=None, theta_k=None):
    """Group velocity in mm/fs along a fixed wave-vector direction."""
    return C_MM_PER_FS / group_index(material, wavelength_nm, branch, direction, theta_k)


def inverse_group_velocity(material, wavelength_nm, branch, direction=None, theta_k=None):
    """1/V_g in fs/mm."""
    return group_index(material, wavelength_nm, branch, direction, theta_k) / C_MM_PER_FS


def gvd(material: Material, wavelength_nm, branch, direction=None, theta_k=None):
    """d^2k/domega^2 in fs^2/mm; positive for normal dispersion."""
    material.check_wavelength(wavelength_nm, margin_nm=1.0)
    _, _, n2 = index_derivatives(material, wavelength_nm, branch, direction, theta_k)
    lam_mm = float(wavelength_nm) * 1e-6
    n2_mm = n2 * 1e12  # 1/nm^2 -> 1/mm^2
    return lam_mm**3 / (2 * math.pi * C_MM_PER_FS**2) * n2_mm


def wavenumber(material: Material, wavelength_nm, branch, direction=None, theta_k=None):
    """k = 2 pi n / lambda in 1/mm."""
    j, k = _resolve(material, branch, direction, theta_k)
    n = solve_modes(1.0 / material.principal_eps(wavelength_nm)[0], k).n[..., j]
    return 2 * math.pi * n / (float(wavelength_nm) * 1e-6)


def ray_direction(material: Material, wavelength_nm, branch, direction):
    """Unit Poynting vector of the mode on ``branch`` travelling along ``direction``."""
    j, k = _resolve(material, branch, direction, None)
    m = solve_modes(1.0 / material.principal_eps(wavelength_nm)[0], k)
    e = m.d[..., j, :] * m.eta  # E is parallel to eta . D
    s = k * np.sum(e * e, axis=-1, keepdims=True) - e * np.sum(k * e, axis=-1, keepdims=True)
    return s / np.linalg.norm(s, axis=-1, keepdims=True)


def walkoff_angle(material: Material, wavelength_nm, theta_k=None, direction=None, branch=None):
    """Angle between Poynting vector and wave vector.

    Uniaxial crystals with ``theta_k`` use the signed closed form
    tan(rho) = (n^2/2) sin(2 theta) (1/n_e^2 - 1/n_o^2) on the extraordinary branch,
    which equals -(1/n) dn/dtheta.  Otherwise the unsigned angle from the Poynting
    vector of ``branch`` (default: extraordinary for uniaxial, slow for biaxial).
    """
    if material.symmetry == "uniaxial" and direction is None:
        if theta_k is None:
            raise ArgumentError("give theta_k or direction")
        n_o, _, n_e = material.principal_indices(wavelength_nm)
        n = index_uniaxial(material, wavelength_nm, "e", theta_k)
        return np.arctan(0.5 * n**2 * np.sin(2 * theta_k) * (1 / n_e**2 - 1 / n_o**2))
    if direction is None:
        direction = direction_from_angles(theta_k)
    if branch is None:
        branch = "e" if material.symmetry == "uniaxial" else "slow"
    k = _unit(direction)
    s = ray_direction(material, wavelength_nm, branch, k)
    return np.arccos(np.clip(np.sum(s * k, axis=-1), -1.0, 1.0))
