"""Direct time-domain integration of the truncated multimode Hamiltonian.

No rotating-wave averaging is applied: all counter-rotating and spectator
terms stay in.  The result is the linear map between initial and final
mode quadratures, from which Bogoliubov coefficients and occupations follow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .coupling import DriveSpec, geometry_matrix
from .errors import GeometryError, IntegrationError
from .rwa import ThermalState
from .spectral import CavityGeometry, Mode, frequency_derivative

#: the step may not exceed this fraction of the fastest period
STEP_FRACTION = 1.0 / 40.0
#: symplectic defect above which an integration is rejected
SYMPLECTIC_FAIL = 1e-6
DEFAULT_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class HamiltonianCoefficients:
    """``Omega_mu^2(t)`` and ``M_{mu nu}(t)`` for a truncated mode set."""

    modes: tuple
    omega0: np.ndarray
    delta_omega2_amp: np.ndarray
    m_geom: np.ndarray
    velocity_amp: float
    omega_drive: float

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def delta_omega2(self, t):
        return self.delta_omega2_amp * np.sin(self.omega_drive * np.asarray(t, dtype=float))[..., None]

    def omega2(self, t):
        return self.omega0 ** 2 + self.delta_omega2(t)

    def coupling(self, t):
        t = np.asarray(t, dtype=float)
        return self.m_geom * (self.velocity_amp * np.cos(self.omega_drive * t))[..., None, None]

    def max_frequency(self) -> float:
        return float(np.sqrt(np.max(self.omega0 ** 2 + np.abs(self.delta_omega2_amp))))


@dataclass(frozen=True)
class TransferState:
    """Transfer matrix on ``(Q_1..Q_N, P_1..P_N)`` at ``time``."""

    n_modes: int
    transfer: np.ndarray
    time: float
    omega0: np.ndarray

    def symplectic_defect(self) -> float:
        return symplectic_defect(self.transfer)


def symplectic_form(n: int) -> np.ndarray:
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def symplectic_defect(s: np.ndarray) -> float:
    """``max |S^T J S - J|`` relative to ``max(1, |S|^2)``."""
    n = s.shape[0] // 2
    j = symplectic_form(n)
    scale = max(1.0, float(np.max(np.abs(s))) ** 2)
    return float(np.max(np.abs(s.T @ j @ s - j))) / scale


def select_modes(spectrum: Sequence[Mode], mode_L: Mode, mode_R: Optional[Mode],
                 n_modes: int = 6) -> list[Mode]:
    """Resonant pair plus the spectators nearest to either of them in frequency."""
    core = [mode_L] + ([mode_R] if mode_R is not None else [])
    if n_modes < len(core):
        raise GeometryError("truncation smaller than the resonant set")
    taken = {m.index for m in core}
    rest = [m for m in spectrum if m.index not in taken]
    rest.sort(key=lambda m: (min(abs(m.omega0 - c.omega0) for c in core), m.index))
    chosen = core + rest[: n_modes - len(core)]
    if len(chosen) < n_modes:
        raise GeometryError(f"spectrum holds only {len(chosen)} usable modes")
    return chosen


def assemble_time_dependent_hamiltonian(geom: CavityGeometry, drive: DriveSpec,
                                        modes: Sequence[Mode], squeezing: bool = True,
                                        velocity: bool = True,
                                        exact_modulation: bool = False) -> HamiltonianCoefficients:
    """Coefficient functions of the driven Hamiltonian, first order in epsilon.

    ``squeezing``/``velocity`` switch the two perturbation terms off for
    diagnostics.  ``exact_modulation`` uses ``2 W dW/da (b - a0) epsilon``
    instead of ``2 epsilon W^2`` for the frequency modulation, which matters
    only for reservoir-dominated modes.
    """
    modes = tuple(modes)
    if len(modes) < 2:
        raise GeometryError("need at least the two resonant modes")
    for m in modes:
        if m.geometry != geom:
            raise GeometryError("modes belong to a different geometry")
    wx = np.array([m.omega_x for m in modes])
    if exact_modulation:
        dw = np.array([frequency_derivative(geom, m.omega_x) for m in modes])
        amp = 2.0 * drive.epsilon * geom.left_length * wx * dw
    else:
        amp = 2.0 * drive.epsilon * wx ** 2
    if not squeezing:
        amp = np.zeros_like(amp)
    m_geom = geometry_matrix(geom, modes)
    vel = drive.epsilon * geom.left_length * drive.omega_drive if velocity else 0.0
    return HamiltonianCoefficients(modes, np.array([m.omega0 for m in modes]), amp,
                                   m_geom, vel, drive.omega_drive)


def default_step(coeffs: HamiltonianCoefficients) -> float:
    return 2.0 * math.pi / coeffs.max_frequency() * STEP_FRACTION


def _scaling(omega0):
    d = np.concatenate([np.sqrt(omega0), 1.0 / np.sqrt(omega0)])
    return d


def integrate_transfer(coeffs: HamiltonianCoefficients, duration: float,
                       step: Optional[float] = None, max_steps: int = DEFAULT_MAX_STEPS,
                       backend=None) -> TransferState:
    """Transfer matrix after ``duration`` with a fixed fourth-order Magnus scheme.

    The step is shrunk so an integer number of steps spans ``duration``.
    ``backend`` overrides the kernel chosen at import (for benchmarking).
    """
    if step is None:
        step = default_step(coeffs)
    if not step > 0:
        raise ValueError("step must be positive")
    limit = default_step(coeffs)
    if step > limit * (1 + 1e-12):
        raise ValueError(f"step {step:.4g} does not resolve the fastest mode (limit {limit:.4g})")
    if not duration >= 0:
        raise ValueError("duration must be >= 0")
    nsteps = int(math.ceil(duration / step)) if duration > 0 else 0
    if nsteps > max_steps:
        raise IntegrationError(f"{nsteps} steps exceed the budget of {max_steps}; "
                               "the drive is too long for direct integration")
    n = coeffs.n_modes
    w = coeffs.omega0
    kmat = coeffs.velocity_amp * coeffs.m_geom * np.sqrt(np.outer(w, 1.0 / w))
    kernel = backend or kernels.magnus4_transfer
    h = duration / nsteps if nsteps else 0.0
    scaled = kernel(w, coeffs.delta_omega2_amp, kmat, coeffs.omega_drive, 0.0, h, nsteps,
                    np.eye(2 * n))
    d = _scaling(w)
    transfer = scaled * d[None, :] / d[:, None]
    defect = symplectic_defect(scaled)
    if defect > SYMPLECTIC_FAIL:
        raise IntegrationError(f"symplectic defect {defect:.3g}: step too large")
    return TransferState(n, transfer, float(duration), w.copy())


def bogoliubov_blocks(ts: TransferState) -> tuple[np.ndarray, np.ndarray]:
    """``(alpha, beta)`` with ``a_mu(t) = sum_nu alpha a_nu + beta a_nu^dag``."""
    n = ts.n_modes
    w = ts.omega0
    wq = np.diag(np.sqrt(w / 2.0))
    wp = np.diag(1.0 / np.sqrt(2.0 * w))
    to_ladder = np.block([[wq, 1j * wp], [wq, -1j * wp]])
    # inverse: Q = (a + a^dag)/sqrt(2W), P = -i sqrt(W/2) (a - a^dag)
    iq = np.diag(1.0 / np.sqrt(2.0 * w))
    ip = np.diag(np.sqrt(w / 2.0))
    from_ladder = np.block([[iq, iq], [-1j * ip, 1j * ip]])
    b = to_ladder @ ts.transfer @ from_ladder
    return b[:n, :n], b[:n, n:]


def particle_numbers(ts: TransferState, state: ThermalState) -> np.ndarray:
    """Occupation of every mode at ``ts.time`` from a thermal start."""
    defect = ts.symplectic_defect()
    if defect > SYMPLECTIC_FAIL:
        raise IntegrationError(f"transfer matrix is not symplectic (defect {defect:.3g})")
    return particle_numbers_from(ts, [state.occupation(w) for w in ts.omega0])


def particle_numbers_from(ts: TransferState, n0) -> np.ndarray:
    """Occupations at ``ts.time`` for explicit initial occupations ``n0`` (diagonal start)."""
    n0 = np.asarray(n0, dtype=float)
    if n0.shape != (ts.n_modes,) or np.any(n0 < 0):
        raise ValueError("need one non-negative occupation per mode")
    alpha, beta = bogoliubov_blocks(ts)
    return (np.abs(alpha) ** 2) @ n0 + (np.abs(beta) ** 2) @ (1.0 + n0)


def bogoliubov_normalization(ts: TransferState) -> np.ndarray:
    """``sum_nu |alpha|^2 - |beta|^2`` per mode (unity for a canonical map)."""
    alpha, beta = bogoliubov_blocks(ts)
    return (np.abs(alpha) ** 2).sum(axis=1) - (np.abs(beta) ** 2).sum(axis=1)
