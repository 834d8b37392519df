"""Design and simulation of two-crystal type-I SPDC polarization-entanglement sources.

Spatial compensators flatten the emission-angle dependence of the relative
phase; a pump precompensator cancels the temporal which-crystal delay.
"""

from .errors import (
    ArgumentError,
    CompensationError,
    DomainError,
    GridError,
    NotPhasematchableError,
    NumericError,
    SpdcError,
)
from .materials import Material, get_material, load_materials
from .phasematch import CrystalPlate, SpdcTriplet, emission_angle, solve_cut_angle
from .qstate import TwoQubitState, concurrence_tangle, fidelity, rho_combined, rho_spatial, rho_temporal
from .source import PumpSpec, SourceSetup, SpectralFilter
from .spatialphase import PhaseMap, design_spatial_compensator, phase_map
from .temporal import DelayBudget, JtpaGrid, delay_budget, design_precompensator, jtpa, visibility

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "CompensationError",
    "CrystalPlate",
    "DelayBudget",
    "DomainError",
    "GridError",
    "JtpaGrid",
    "Material",
    "NotPhasematchableError",
    "NumericError",
    "PhaseMap",
    "PumpSpec",
    "SourceSetup",
    "SpdcError",
    "SpdcTriplet",
    "SpectralFilter",
    "TwoQubitState",
    "concurrence_tangle",
    "delay_budget",
    "design_precompensator",
    "design_spatial_compensator",
    "emission_angle",
    "fidelity",
    "get_material",
    "jtpa",
    "load_materials",
    "phase_map",
    "rho_combined",
    "rho_spatial",
    "rho_temporal",
    "solve_cut_angle",
    "visibility",
]
