"""Two-qubit polarization states over the (HH, HV, VH, VV) basis and entanglement metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError, NumericError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2)
BASIS_LABELS = ("HH", "HV", "VH", "VV")

# entries that vanish for X states (nonzero only on the diagonal and anti-diagonal)
_OFF_X = ~(np.eye(4, dtype=bool) | np.eye(4, dtype=bool)[::-1])


@dataclass(frozen=True)
class TwoQubitState:
    """Validated 4x4 density matrix."""

    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (4, 4):
            raise ArgumentError(f"density matrix must be 4x4, got {r.shape}")
        if not np.all(np.isfinite(r)):
            raise NumericError("density matrix has non-finite entries", residual=math.inf)
        herm = float(np.max(np.abs(r - r.conj().T)))
        if herm > HERMITIAN_TOL:
            raise NumericError("density matrix is not Hermitian", residual=herm)
        tr = abs(np.trace(r) - 1)
        if tr > TRACE_TOL:
            raise NumericError("density matrix trace differs from 1", residual=tr)
        lo = float(np.min(np.linalg.eigvalsh(r)))
        if lo < -PSD_TOL:
            raise NumericError("density matrix is not positive semidefinite", residual=lo)
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def pure(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def coherence(self) -> complex:
        """<HH|rho|VV>."""
        return complex(self.rho[0, 3])

    def to_json(self) -> dict:
        return {
            "basis": list(BASIS_LABELS),
            "real": [[float(x) for x in row] for row in self.rho.real],
            "imag": [[float(x) for x in row] for row in self.rho.imag],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TwoQubitState":
        return cls(np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float))


def _x_state(coherence, balance=0.5):
    if not 0 <= balance <= 1:
        raise ArgumentError("balance must lie in [0, 1]")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = balance
    rho[3, 3] = 1 - balance
    c = complex(coherence) * 2 * math.sqrt(balance * (1 - balance))
    rho[0, 3] = c
    rho[3, 0] = c.conjugate()
    return TwoQubitState(rho)


def _phase_average(phases, weights):
    phases = np.asarray(phases, dtype=float).ravel()
    if phases.size == 0:
        raise ArgumentError("no phase samples")
    if weights is None:
        w = np.full(phases.size, 1.0 / phases.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != phases.shape:
            raise ArgumentError("weights and phases differ in length")
        if np.any(w < 0):
            raise ArgumentError("weights must be non-negative")
        if abs(w.sum() - 1) > 1e-9:
            raise ArgumentError("weights must sum to 1")
    return complex(np.sum(w * np.exp(-1j * phases)))


def rho_spatial(phases, weights=None, balance=0.5) -> TwoQubitState:
    """Mixture of |HH> + e^{i phi_k}|VV> over phase samples (rad); uniform weights by default."""
    return _x_state(0.5 * _phase_average(phases, weights), balance)


def rho_temporal(v, balance=0.5) -> TwoQubitState:
    """State after tracing over time: coherence v/2."""
    v = complex(v)
    if abs(v) > 1 + 1e-12:
        raise DomainError(f"|v| = {abs(v)} exceeds 1")
    if abs(v) > 1:
        v = v / abs(v)
    return _x_state(0.5 * v, balance)


def rho_combined(phases, v, weights=None, balance=0.5) -> TwoQubitState:
    """Spatial and temporal averaging factorized: coherence v <e^{-i phi}> / 2."""
    v = complex(v)
    if abs(v) > 1 + 1e-12:
        raise DomainError(f"|v| = {abs(v)} exceeds 1")
    c = 0.5 * v * _phase_average(phases, weights)
    if abs(c) > 0.5:
        c = 0.5 * c / abs(c)
    return _x_state(c, balance)


def fidelity(state: TwoQubitState, target=PHI_PLUS) -> float:
    psi = np.asarray(target, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    f = np.vdot(psi, state.rho @ psi)
    if abs(f.imag) > 1e-12:
        raise NumericError("fidelity has an imaginary part", residual=abs(f.imag))
    return float(f.real)


def max_phase_fidelity(state: TwoQubitState) -> tuple[float, float]:
    """Best fidelity with (|HH> + e^{i phi}|VV>)/sqrt2 over phi; returns (F, phi in deg)."""
    c = state.coherence
    phi = -math.atan2(c.imag, c.real)
    target = np.array([1, 0, 0, np.exp(1j * phi)]) / math.sqrt(2)
    return fidelity(state, target), math.degrees(phi)


def concurrence_tangle(state: TwoQubitState) -> tuple[float, float]:
    """Wootters concurrence and tangle (concurrence squared).

    X states use the closed form, which avoids square roots of rounding-level
    eigenvalues; other states go through the spin-flip eigenvalues.
    """
    r = state.rho
    if not np.any(r[_OFF_X]):
        p = r.diagonal().real.clip(0.0)
        c = 2 * max(0.0, float(abs(r[0, 3]) - math.sqrt(p[1] * p[2])), float(abs(r[1, 2]) - math.sqrt(p[0] * p[3])))
        return c, c * c
    rt = SIGMA_YY @ r.conj() @ SIGMA_YY
    lam = np.linalg.eigvals(r @ rt)
    lam = np.sort(np.sqrt(np.clip(lam.real, 0.0, None)))[::-1]
    c = max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))
    return c, c * c


def state_phase(state: TwoQubitState) -> float:
    """arg <HH|rho|VV> in degrees."""
    c = state.coherence
    if abs(c) < 1e-9:
        raise DomainError("phase undefined: coherence vanishes")
    return math.degrees(math.atan2(c.imag, c.real))


def metrics(state: TwoQubitState) -> dict:
    c, t = concurrence_tangle(state)
    fmax, phi = max_phase_fidelity(state)
    return {
        "concurrence": c,
        "tangle": t,
        "fidelity_phi_plus": fidelity(state),
        "fidelity_best_phase": fmax,
        "best_phase_deg": phi,
    }


def source_state(setup, iris_diameter=None, compensated=True, order=1, grid=None, n_radial=12) -> TwoQubitState:
    """Combined state of a configured source: iris phase average times temporal visibility.

    ``compensated=False`` drops every compensator.  ``order`` selects the
    temporal phase model ('exact' or 1); a zero pump width gives v = 1.
    """
    from .spatialphase import iris_phases
    from .temporal import source_visibility

    s = setup if compensated else setup.uncompensated()
    phases, w = iris_phases(s, iris_diameter, compensated, n_radial)
    v = 1.0 if s.pump.sigma == 0 else source_visibility(s, grid, order)
    return rho_combined(phases, v, w)
