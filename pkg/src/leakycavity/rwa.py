"""Effective (rotating-wave) dynamics of the resonant cavity/reservoir pair.

The ladder vector is ``x = (a_L, a_L^dag, a_R, a_R^dag)`` and evolves as
``x(T) = expm(A T) x(0)``.  Particle numbers follow from the bilinear form
``<x_i(T) x_j(T)> = (U C U^T)_{ij}`` with ``C`` the initial correlations.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coupling import EffectiveParams
from .errors import GeometryError

#: relative tolerance for classifying |chi| == xi as the threshold
THRESHOLD_RTOL = 1e-12

#: commutators [x_i, x_j] of the ladder vector
SIGMA = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, -1.0, 0.0]])

#: index swap (1<->2, 3<->4) relating a(T) and its adjoint
CONJUGATION = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)


class Regime(enum.Enum):
    GROWTH = "Growth"
    THRESHOLD = "Threshold"
    OSCILLATION = "Oscillation"


def classify(xi: float, chi: float) -> Regime:
    c = abs(chi)
    if abs(c - xi) <= THRESHOLD_RTOL * max(xi, c):
        return Regime.THRESHOLD
    return Regime.GROWTH if c < xi else Regime.OSCILLATION


def closed_form_eigenvalues(xi: float, chi: float) -> np.ndarray:
    r = cmath.sqrt(xi * xi - chi * chi)
    return np.array([xi + r, xi - r, -xi + r, -xi - r])


@dataclass(frozen=True)
class EvolutionMatrix:
    generator: np.ndarray
    eigenvalues: np.ndarray
    xi: float
    chi: float

    @property
    def regime(self) -> Regime:
        return classify(self.xi, self.chi)

    @property
    def defective(self) -> bool:
        """True at the threshold, where A has a single eigenvector per eigenvalue."""
        return self.regime is Regime.THRESHOLD and self.xi > 0

    @property
    def growth_rate(self) -> float:
        """Largest real part among the eigenvalues."""
        return float(max(ev.real for ev in self.eigenvalues))

    def propagator(self, duration: float) -> np.ndarray:
        return propagate(self, duration)


def build_generator(params: EffectiveParams) -> EvolutionMatrix:
    xi, chi = float(params.xi), float(params.chi)
    if not xi >= 0:
        raise GeometryError(f"xi must be >= 0, got {xi}")
    if not math.isfinite(chi):
        raise GeometryError("chi must be finite")
    a = np.array([[0.0, 2 * xi, chi, 0.0],
                  [2 * xi, 0.0, 0.0, chi],
                  [-chi, 0.0, 0.0, 0.0],
                  [0.0, -chi, 0.0, 0.0]])
    return EvolutionMatrix(a, closed_form_eigenvalues(xi, chi), xi, chi)


def propagate(ev: EvolutionMatrix, duration: float) -> np.ndarray:
    """``U(T) = expm(A T)`` by scaling and squaring."""
    if not duration >= 0:
        raise ValueError("duration must be >= 0")
    return scipy.linalg.expm(ev.generator * duration)


def propagate_scaled(ev: EvolutionMatrix, duration: float) -> tuple[np.ndarray, float]:
    """``(V, s)`` with ``U(T) = exp(s) V`` and ``V`` free of the leading growth."""
    if not duration >= 0:
        raise ValueError("duration must be >= 0")
    s = ev.growth_rate * duration
    return scipy.linalg.expm((ev.generator - ev.growth_rate * np.eye(4)) * duration), s


def propagate_eig(ev: EvolutionMatrix, duration: float) -> np.ndarray:
    """Eigen-decomposition route to ``U(T)``; refuses near-defective generators."""
    if ev.xi > 0 and abs(abs(ev.chi) / ev.xi - 1.0) <= 1e-3:
        raise ValueError("generator too close to the defective point for diagonalization")
    w, v = np.linalg.eig(ev.generator)
    u = (v * np.exp(w * duration)) @ np.linalg.inv(v)
    return u.real


def bose_einstein(beta: float, omega: float) -> float:
    if math.isinf(beta):
        return 0.0
    if not beta > 0:
        raise GeometryError("beta must be positive (math.inf for the vacuum)")
    return 1.0 / math.expm1(beta * omega)


@dataclass(frozen=True)
class ThermalState:
    """Canonical initial state, diagonal in the mode occupations."""

    beta: float
    n0_L: float
    n0_R: float

    def __post_init__(self):
        if self.n0_L < 0 or self.n0_R < 0:
            raise GeometryError("occupations must be >= 0")

    @classmethod
    def vacuum(cls) -> "ThermalState":
        return cls(math.inf, 0.0, 0.0)

    @classmethod
    def at(cls, beta: float, omega_L: float, omega_R: float) -> "ThermalState":
        return cls(beta, bose_einstein(beta, omega_L), bose_einstein(beta, omega_R))

    @property
    def is_vacuum(self) -> bool:
        return math.isinf(self.beta)

    def occupation(self, omega: float) -> float:
        return bose_einstein(self.beta, omega)


def correlations(state: ThermalState) -> np.ndarray:
    """``C_ij = <x_i x_j>`` at T = 0."""
    c = np.zeros((4, 4))
    c[0, 1] = 1.0 + state.n0_L
    c[1, 0] = state.n0_L
    c[2, 3] = 1.0 + state.n0_R
    c[3, 2] = state.n0_R
    return c


def number_expectations(u: np.ndarray, state: ThermalState) -> tuple[float, float]:
    """``(<N_L>, <N_R>) = (<x_2 x_1>, <x_4 x_3>)`` after the map ``u``."""
    b = u @ correlations(state) @ u.T
    return float(b[1, 0]), float(b[3, 2])


def printed_response(u: np.ndarray, n0_L: float, n0_R: float) -> float:
    """<N_L> from its explicit matrix-element expansion (1-based U_ij)."""
    U = lambda i, j: u[i - 1, j - 1]  # noqa: E731
    return ((U(1, 2) * U(2, 1) + U(1, 4) * U(2, 3))
            + (U(1, 1) * U(2, 2) + U(1, 2) * U(2, 1)) * n0_L
            + (U(1, 3) * U(2, 4) + U(1, 4) * U(2, 3)) * n0_R)


@dataclass(frozen=True)
class ResponseResult:
    n_L: float
    n_R: float
    duration: float
    regime: Regime
    log_n_L: float
    log_n_R: float


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log_pos(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def response(ev: EvolutionMatrix, state: ThermalState, duration: float) -> ResponseResult:
    """Occupations of both resonant modes after the drive has run for ``duration``.

    The leading exponential is factored out before exponentiating, so the
    logarithms stay finite far beyond the float range of ``n_L`` itself.
    """
    v, s = propagate_scaled(ev, duration)
    bl, br = number_expectations(v, state)
    # roundoff can leave a vanishing occupation marginally negative
    bl, br = max(bl, 0.0), max(br, 0.0)
    log_l, log_r = 2 * s + _log_pos(bl), 2 * s + _log_pos(br)
    return ResponseResult(_safe_exp(log_l), _safe_exp(log_r), duration, ev.regime, log_l, log_r)
