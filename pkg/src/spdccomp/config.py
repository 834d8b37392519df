"""Scenario configuration files (JSON) and the shipped source presets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArgumentError
from .materials import load_materials
from .phasematch import CrystalPlate, SpdcTriplet
from .source import PumpSpec, SourceSetup, SpectralFilter

SCHEMA_VERSION = 1
PRESET_DIR = Path(__file__).with_name("presets")
DESIGN = "design"

_TOP_KEYS = {"schema_version", "name", "materials", "source", "collection", "compensators"}
_SOURCE_KEYS = {"material", "theta_deg", "phi_deg", "thickness_mm", "pump", "lambda_s_nm", "lambda_i_nm"}
_PUMP_KEYS = {"center_nm", "fwhm_nm", "kind", "convention"}
_COLLECTION_KEYS = {
    "iris_distance_mm",
    "iris_diameter_mm",
    "diameters_mm",
    "filter_fwhm_nm",
    "filter_shape",
    "emission_azimuth_deg",
    "scan_axis",
}
_COMP_KEYS = {"role", "material", "theta_deg", "phi_deg", "thickness_mm", "rotation_deg"}
_COMP_ROLES = ("spatial_comp_signal", "spatial_comp_idler", "precompensator")


def _check_keys(block, allowed, where, required=()):
    if not isinstance(block, dict):
        raise ArgumentError(f"{where} must be an object")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ArgumentError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    missing = [k for k in required if k not in block]
    if missing:
        raise ArgumentError(f"missing key(s) in {where}: {', '.join(missing)}")


def _num(block, key, where, default=None):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ArgumentError(f"{where}.{key} must be a finite number")
    return float(v)


@dataclass(frozen=True)
class CompensatorSpec:
    """A compensator entry; ``thickness`` is None for a design placeholder."""

    role: str
    material: str
    theta_deg: float
    phi_deg: float = 0.0
    thickness: float | None = None
    rotation_deg: float | None = None

    @property
    def is_placeholder(self):
        return self.thickness is None

    def plate(self, materials, thickness=None) -> CrystalPlate:
        t = self.thickness if thickness is None else thickness
        if t is None:
            raise ArgumentError(f"{self.role} has no thickness yet")
        return CrystalPlate(
            _material(materials, self.material),
            math.radians(self.theta_deg),
            math.radians(self.phi_deg),
            t,
            self.role,
            math.radians(self.rotation_deg or 0.0),
        )


def _material(materials, name):
    for key, m in materials.items():
        if key.lower() == name.lower():
            return m
    raise ArgumentError(f"unknown material {name!r}; known: {', '.join(sorted(materials))}")


@dataclass
class ScenarioConfig:
    name: str
    source: dict
    collection: dict
    compensators: list[CompensatorSpec] = field(default_factory=list)
    materials_path: str | None = None

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "ScenarioConfig":
        _check_keys(data, _TOP_KEYS, "config", required=("source",))
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ArgumentError(f"unsupported schema_version {version}")
        src = data["source"]
        _check_keys(src, _SOURCE_KEYS, "source", required=("material", "theta_deg", "thickness_mm", "pump", "lambda_s_nm"))
        _check_keys(src["pump"], _PUMP_KEYS, "source.pump", required=("center_nm",))
        if _num(src, "thickness_mm", "source") <= 0:
            raise ArgumentError("source.thickness_mm must be positive")
        col = data.get("collection", {})
        _check_keys(col, _COLLECTION_KEYS, "collection")
        comps = []
        for k, c in enumerate(data.get("compensators", [])):
            where = f"compensators[{k}]"
            _check_keys(c, _COMP_KEYS, where, required=("role", "material", "theta_deg", "thickness_mm"))
            if c["role"] not in _COMP_ROLES:
                raise ArgumentError(f"{where}.role must be one of {', '.join(_COMP_ROLES)}")
            t = c["thickness_mm"]
            if t == DESIGN:
                t = None
            else:
                t = _num(c, "thickness_mm", where)
                if t < 0:
                    raise ArgumentError(f"{where}.thickness_mm must be >= 0")
            rot = c.get("rotation_deg")
            comps.append(
                CompensatorSpec(
                    c["role"],
                    str(c["material"]),
                    _num(c, "theta_deg", where),
                    _num(c, "phi_deg", where, 0.0),
                    t,
                    None if rot is None else _num(c, "rotation_deg", where),
                )
            )
        roles = [c.role for c in comps]
        if len(set(roles)) != len(roles):
            raise ArgumentError("each compensator role may appear once")
        mpath = data.get("materials")
        if mpath is not None and base_dir is not None and not Path(mpath).is_absolute():
            mpath = str(Path(base_dir) / mpath)
        cfg = cls(str(data.get("name", "scenario")), src, col, comps, mpath)
        cfg.triplet()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except FileNotFoundError:
            raise ArgumentError(f"config file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"config file {p} is not valid JSON: {exc}") from None
        return cls.from_dict(data, base_dir=p.parent)

    def triplet(self) -> SpdcTriplet:
        """Wavelength triplet; a stated idler must satisfy energy conservation."""
        lp = _num(self.source["pump"], "center_nm", "source.pump")
        ls = _num(self.source, "lambda_s_nm", "source")
        t = SpdcTriplet.from_pump_signal(lp, ls)
        if "lambda_i_nm" in self.source:
            li = _num(self.source, "lambda_i_nm", "source")
            if abs(li - t.lambda_i) > 1e-12 * t.lambda_i:
                raise ArgumentError(
                    f"idler {li} nm violates energy conservation; {lp} -> {ls} nm needs {t.lambda_i:.6f} nm"
                )
        return t

    def compensator(self, role) -> CompensatorSpec | None:
        return next((c for c in self.compensators if c.role == role), None)

    @property
    def diameters(self) -> list[float]:
        ds = self.collection.get("diameters_mm")
        if ds is None:
            return [float(self.collection.get("iris_diameter_mm", 1.0))]
        if not isinstance(ds, list) or not ds:
            raise ArgumentError("collection.diameters_mm must be a non-empty list")
        return [float(d) for d in ds]

    def build(self, materials=None, include_placeholders=False) -> SourceSetup:
        """SourceSetup with every compensator whose thickness is known.

        Placeholders are skipped unless ``include_placeholders`` (then zero thickness).
        """
        mats = materials if materials is not None else load_materials(self.materials_path)
        src, col = self.source, self.collection
        p = src["pump"]
        pump = PumpSpec(
            _num(p, "center_nm", "source.pump"),
            _num(p, "fwhm_nm", "source.pump", 0.0),
            p.get("kind", "cw_diode"),
            p.get("convention", "intensity"),
        )
        fwhm = col.get("filter_fwhm_nm")
        filt = SpectralFilter(float(fwhm), col.get("filter_shape", "gaussian")) if fwhm else SpectralFilter(shape="none")
        kw = dict(
            iris_distance=float(col.get("iris_distance_mm", 840.0)),
            iris_diameter=float(col.get("iris_diameter_mm", 1.0)),
            emission_azimuth=math.radians(float(col.get("emission_azimuth_deg", 90.0))),
            scan_axis=col.get("scan_axis", "radial"),
            filter_signal=filt,
            filter_idler=filt,
            name=self.name,
        )
        setup = SourceSetup.two_crystal(
            _material(mats, src["material"]),
            math.radians(_num(src, "theta_deg", "source")),
            math.radians(_num(src, "phi_deg", "source", 0.0)),
            _num(src, "thickness_mm", "source"),
            pump,
            self.triplet().lambda_s,
            **kw,
        )
        fields = {"spatial_comp_signal": "sc_signal", "spatial_comp_idler": "sc_idler", "precompensator": "precompensator"}
        changes = {}
        for c in self.compensators:
            if c.is_placeholder and not include_placeholders:
                continue
            changes[fields[c.role]] = c.plate(mats, 0.0 if c.is_placeholder else None)
        return setup.with_(**changes)


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def load_preset(name) -> ScenarioConfig:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ArgumentError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return ScenarioConfig.load(path)

