"""Source description shared by the spatial, temporal and state modules."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError
from .materials import C_NM_PER_FS, Material
from .phasematch import CrystalPlate, SpdcTriplet, orient_for_vertical_pump

# FWHM of a Gaussian intensity in units of its amplitude 1/e parameter: |exp(-(x/s)^2)|^2 halves at x = s*sqrt(ln2/2)
_INTENSITY_FWHM_PER_SIGMA = 2 * math.sqrt(math.log(2) / 2)
_AMPLITUDE_FWHM_PER_SIGMA = 2 * math.sqrt(math.log(2))

PUMP_KINDS = ("cw_diode", "pulsed", "monochromatic")
FWHM_CONVENTIONS = ("intensity", "amplitude")


def fwhm_nm_to_rad_per_fs(fwhm_nm, center_nm):
    """Angular-frequency width (rad/fs) of a wavelength interval centred at ``center_nm``."""
    return 2 * math.pi * C_NM_PER_FS * fwhm_nm / center_nm**2


def rad_per_fs_to_fwhm_nm(width, center_nm):
    return width * center_nm**2 / (2 * math.pi * C_NM_PER_FS)


@dataclass(frozen=True)
class PumpSpec:
    """Gaussian pump with spectral amplitude exp(-(nu/sigma)^2).

    ``fwhm_nm`` is read as an intensity FWHM unless ``convention='amplitude'``.
    A zero width means a monochromatic pump.
    """

    center_nm: float
    fwhm_nm: float = 0.0
    kind: str = "cw_diode"
    convention: str = "intensity"

    def __post_init__(self):
        if not (self.center_nm > 0 and math.isfinite(self.center_nm)):
            raise ArgumentError("pump centre wavelength must be positive")
        if not (self.fwhm_nm >= 0 and math.isfinite(self.fwhm_nm)):
            raise ArgumentError("pump bandwidth must be >= 0")
        if self.kind not in PUMP_KINDS:
            raise ArgumentError(f"unknown pump kind {self.kind!r}")
        if self.convention not in FWHM_CONVENTIONS:
            raise ArgumentError(f"unknown FWHM convention {self.convention!r}")

    @property
    def sigma(self) -> float:
        """Amplitude width sigma_p in rad/fs."""
        per = _INTENSITY_FWHM_PER_SIGMA if self.convention == "intensity" else _AMPLITUDE_FWHM_PER_SIGMA
        return fwhm_nm_to_rad_per_fs(self.fwhm_nm, self.center_nm) / per

    @classmethod
    def from_sigma(cls, center_nm, sigma, kind="pulsed", convention="intensity"):
        per = _INTENSITY_FWHM_PER_SIGMA if convention == "intensity" else _AMPLITUDE_FWHM_PER_SIGMA
        return cls(center_nm, rad_per_fs_to_fwhm_nm(sigma * per, center_nm), kind, convention)

    @property
    def omega(self) -> float:
        return 2 * math.pi * C_NM_PER_FS / self.center_nm


FILTER_SHAPES = ("gaussian", "tophat", "none")


@dataclass(frozen=True)
class SpectralFilter:
    """Amplitude transmission of a bandpass filter; ``fwhm_nm`` refers to intensity transmission."""

    fwhm_nm: float = 10.0
    shape: str = "gaussian"
    center_nm: float | None = None

    def __post_init__(self):
        if self.shape not in FILTER_SHAPES:
            raise ArgumentError(f"unknown filter shape {self.shape!r}")
        if self.shape != "none" and not (self.fwhm_nm > 0 and math.isfinite(self.fwhm_nm)):
            raise ArgumentError("filter FWHM must be positive")

    def amplitude(self, nu, center_nm, offset=0.0):
        """Amplitude response at detuning ``nu`` (rad/fs) from the photon centre frequency.

        ``offset`` is the filter centre detuning from that photon frequency.
        """
        nu = np.asarray(nu, dtype=float)
        if self.shape == "none":
            return np.ones_like(nu)
        w = fwhm_nm_to_rad_per_fs(self.fwhm_nm, center_nm)
        x = nu - offset
        if self.shape == "gaussian":
            return np.exp(-2 * math.log(2) * (x / w) ** 2)
        return (np.abs(x) <= w / 2).astype(float)


NO_FILTER = SpectralFilter(shape="none")


@dataclass(frozen=True)
class SourceSetup:
    """Two-crystal type-I source with optional compensators.

    ``crystal1`` pumps vertically polarized light on its fast branch; crystal 2
    is the same plate turned by 90 deg.  The signal arm points along lab azimuth
    ``emission_azimuth``; irises sit ``iris_distance`` mm away.
    """

    crystal1: CrystalPlate
    crystal2: CrystalPlate
    pump: PumpSpec
    triplet: SpdcTriplet
    iris_distance: float = 840.0
    iris_diameter: float = 1.0
    emission_azimuth: float = math.pi / 2
    scan_axis: str = "radial"
    filter_signal: SpectralFilter = NO_FILTER
    filter_idler: SpectralFilter = NO_FILTER
    sc_signal: CrystalPlate | None = None
    sc_idler: CrystalPlate | None = None
    precompensator: CrystalPlate | None = None
    name: str = "source"

    def __post_init__(self):
        if abs(self.pump.center_nm - self.triplet.lambda_p) > 1e-9 * self.triplet.lambda_p:
            raise ArgumentError("pump centre wavelength and triplet pump wavelength differ")
        if not self.iris_distance > 0:
            raise ArgumentError("iris distance must be positive")
        if not self.iris_diameter >= 0:
            raise ArgumentError("iris diameter must be >= 0")
        if self.scan_axis not in ("radial", "tangential"):
            raise ArgumentError("scan axis must be 'radial' or 'tangential'")

    @classmethod
    def two_crystal(
        cls,
        material: Material,
        theta_cut,
        phi_cut,
        thickness,
        pump: PumpSpec,
        lambda_s,
        **kwargs,
    ) -> "SourceSetup":
        """Build crystal 1 (auto-oriented for a V pump on the fast branch) and crystal 2 at +90 deg."""
        c1 = CrystalPlate(material, theta_cut, phi_cut, thickness, "dc_crystal_1")
        c1 = orient_for_vertical_pump(c1, pump.center_nm)
        c2 = replace(c1.rotated(math.pi / 2), role="dc_crystal_2")
        triplet = SpdcTriplet.from_pump_signal(pump.center_nm, lambda_s)
        return cls(c1, c2, pump, triplet, **kwargs)

    def with_(self, **changes) -> "SourceSetup":
        return replace(self, **changes)

    def with_crystal_thickness(self, thickness) -> "SourceSetup":
        return replace(
            self,
            crystal1=self.crystal1.with_thickness(thickness),
            crystal2=self.crystal2.with_thickness(thickness),
        )

    def uncompensated(self) -> "SourceSetup":
        return replace(self, sc_signal=None, sc_idler=None, precompensator=None)

    @property
    def spatial_compensators(self):
        return [p for p in (self.sc_signal, self.sc_idler) if p is not None]

    def describe(self) -> dict:
        def plate(p):
            if p is None:
                return None
            return {
                "material": p.material.name,
                "theta_deg": math.degrees(p.theta_cut),
                "phi_deg": math.degrees(p.phi_cut),
                "thickness_mm": p.thickness,
                "rotation_deg": math.degrees(p.rotation),
                "role": p.role,
            }

        return {
            "name": self.name,
            "crystal1": plate(self.crystal1),
            "crystal2": plate(self.crystal2),
            "pump": {
                "center_nm": self.pump.center_nm,
                "fwhm_nm": self.pump.fwhm_nm,
                "kind": self.pump.kind,
                "convention": self.pump.convention,
            },
            "lambda_s_nm": self.triplet.lambda_s,
            "lambda_i_nm": self.triplet.lambda_i,
            "iris_distance_mm": self.iris_distance,
            "iris_diameter_mm": self.iris_diameter,
            "emission_azimuth_deg": math.degrees(self.emission_azimuth),
            "scan_axis": self.scan_axis,
            "filters": [
                {"fwhm_nm": f.fwhm_nm, "shape": f.shape}
                for f in (self.filter_signal, self.filter_idler)
            ],
            "sc_signal": plate(self.sc_signal),
            "sc_idler": plate(self.sc_idler),
            "precompensator": plate(self.precompensator),
        }

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
