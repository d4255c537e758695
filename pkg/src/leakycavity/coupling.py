"""Moving-wall couplings and the effective squeezing / velocity parameters."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryError, ResonanceError
from .spectral import CavityGeometry, Dominance, Mode, frequency_derivative

#: default relative detuning accepted by :func:`find_resonant_partner`
PARTNER_RTOL = 1e-6
#: relative tolerance on omega_drive = 2 Omega_L for the RWA parameters
RESONANCE_RTOL = 1e-9


class MultiplePartnersWarning(UserWarning):
    """More than one reservoir mode satisfies the velocity resonance."""


@dataclass(frozen=True)
class DriveSpec:
    """Harmonic wall motion ``a(t) = a0 + epsilon (b - a0) sin(omega_drive t)``."""

    epsilon: float
    omega_drive: float
    duration: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise GeometryError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.omega_drive > 0:
            raise GeometryError("omega_drive must be positive")
        if not self.duration >= 0:
            raise GeometryError("duration must be >= 0")

    @property
    def cycles(self) -> float:
        """omega_drive * duration, the RWA validity diagnostic."""
        return self.omega_drive * self.duration


@dataclass(frozen=True)
class CouplingData:
    m_geom: np.ndarray
    delta_omega2_amp: np.ndarray
    resonant_pair: Optional[tuple[int, int]]


@dataclass(frozen=True)
class EffectiveParams:
    xi: float
    chi: float
    mode_L: Optional[Mode] = None
    mode_R: Optional[Mode] = None
    omega_drive: float = math.nan


@lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _nodes(n_osc: float):
    n = 48 + 4 * int(math.ceil(n_osc))
    return _gauss_legendre(n)


def _wall_derivatives(mode: Mode):
    """(dOmega/da, dL/da, dR/da) for a normalized mode."""
    g = mode.geometry
    w = mode.omega_x
    dw = frequency_derivative(g, w)
    d1, d2 = g.left_length, g.right_length
    if g.is_ideal:
        if mode.dominance is Dominance.LEFT:
            return dw, mode.amp_left / (2.0 * d1), 0.0
        return 0.0, 0.0, 0.0
    s1, s2 = math.sin(w * d1), math.sin(w * d2)
    c1, c2 = math.cos(w * d1), math.cos(w * d2)
    ds1 = c1 * (dw * d1 - w)
    ds2 = c2 * dw * d2
    i1 = 0.5 * d1 - math.sin(2 * w * d1) / (4 * w)
    i2 = 0.5 * d2 - math.sin(2 * w * d2) / (4 * w)
    di1 = -s1 * s1 + dw * (-d1 * math.cos(2 * w * d1) / (2 * w) + math.sin(2 * w * d1) / (4 * w * w))
    di2 = dw * (-d2 * math.cos(2 * w * d2) / (2 * w) + math.sin(2 * w * d2) / (4 * w * w))
    den = s2 * s2 * i1 + s1 * s1 * i2
    dden = 2 * s2 * ds2 * i1 + s2 * s2 * di1 + 2 * s1 * ds1 * i2 + s1 * s1 * di2
    kappa = 1.0 / math.sqrt(den)
    dkappa = -0.5 * kappa * dden / den
    # recover the sign fixed in spectral._amplitudes
    sigma = math.copysign(1.0, mode.amp_left * s2) if s2 != 0 else math.copysign(1.0, mode.amp_right * s1)
    return dw, sigma * (dkappa * s2 + kappa * ds2), sigma * (dkappa * s1 + kappa * ds1)


def wall_derivative(mode: Mode, x):
    """d f_mu(x) / d a0 at fixed b, c, gamma (zero outside the domain)."""
    g = mode.geometry
    dw, dl, dr = _wall_derivatives(mode)
    w = mode.omega_x
    x = np.asarray(x, dtype=float)
    y = x - g.a0
    z = g.c - x
    left = dl * np.sin(w * y) + mode.amp_left * np.cos(w * y) * (dw * y - w)
    right = dr * np.sin(w * z) + mode.amp_right * np.cos(w * z) * dw * z
    out = np.where(x <= g.b, left, right)
    return np.where((x < g.a0) | (x > g.c), 0.0, out)


def _check_same_geometry(geom, *modes):
    for m in modes:
        if m.geometry != geom:
            raise GeometryError("modes belong to a different geometry")


def geometry_factor(geom: CavityGeometry, mu: Mode, nu: Mode) -> float:
    """Overlap ``m_{mu nu} = int (d f_mu / d a) f_nu dx`` over the rest domain."""
    _check_same_geometry(geom, mu, nu)
    if mu.index == nu.index and mu.omega_x == nu.omega_x:
        return 0.0
    total = 0.0
    for lo, hi in ((geom.a0, geom.b), (geom.b, geom.c)):
        n_osc = (mu.omega_x + nu.omega_x) * (hi - lo) / math.pi
        t, wts = _nodes(n_osc)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * float(np.dot(wts, wall_derivative(mu, x) * nu(x)))
    return total


def geometry_matrix(geom: CavityGeometry, modes: Sequence[Mode]) -> np.ndarray:
    n = len(modes)
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                m[i, j] = geometry_factor(geom, modes[i], modes[j])
    return m


def resonance_detunings(spectrum: Sequence[Mode], mode_L: Mode, omega_drive: float):
    """Relative detunings of both velocity-resonance branches for every mode.

    Returns ``(mode, branch, detuning)`` triples with branch ``"difference"``
    for ``|Omega_L - Omega_nu|`` and ``"sum"`` for ``Omega_L + Omega_nu``.
    """
    out = []
    for m in spectrum:
        if m.index == mode_L.index:
            continue
        out.append((m, "difference", abs(abs(mode_L.omega0 - m.omega0) - omega_drive) / omega_drive))
        out.append((m, "sum", abs(mode_L.omega0 + m.omega0 - omega_drive) / omega_drive))
    return out


def find_resonant_partner(spectrum: Sequence[Mode], mode_L: Mode, omega_drive: float,
                          tol: float = PARTNER_RTOL) -> Optional[Mode]:
    """Reservoir mode closest to the difference-branch velocity resonance.

    Cavity-dominated modes are skipped: for a generic cavity they miss the
    condition, and the effective Hamiltonian only covers cavity-reservoir
    exchange.  Sum-branch matches are reported as warnings, not returned.
    """
    hits = []
    for m, branch, det in resonance_detunings(spectrum, mode_L, omega_drive):
        if m.dominance is not Dominance.RIGHT or det >= tol:
            continue
        if branch == "sum":
            warnings.warn(f"sum-branch resonance with mode {m.index} ignored",
                          MultiplePartnersWarning, stacklevel=2)
            continue
        hits.append((det, m))
    if not hits:
        return None
    hits.sort(key=lambda h: h[0])
    if len(hits) > 1:
        warnings.warn(f"{len(hits)} reservoir modes within tol {tol:g}; using mode "
                      f"{hits[0][1].index}", MultiplePartnersWarning, stacklevel=2)
    return hits[0][1]


def squeezing_parameter(epsilon: float, mode_L: Mode) -> float:
    return epsilon * mode_L.omega0 * (mode_L.omega_x / mode_L.omega0) ** 2 / 4.0


def velocity_parameter(geom: CavityGeometry, epsilon: float, mode_L: Mode, mode_R: Mode) -> float:
    wl, wr = mode_L.omega0, mode_R.omega0
    m_lr = geometry_factor(geom, mode_L, mode_R)
    return epsilon * wl * (math.sqrt(wr / wl) + math.sqrt(wl / wr)) * m_lr * geom.left_length / 4.0


def effective_params(geom: CavityGeometry, drive: DriveSpec, mode_L: Mode,
                     mode_R: Optional[Mode] = None) -> EffectiveParams:
    """Squeezing and velocity parameters for a drive at twice Omega_L."""
    _check_same_geometry(geom, mode_L, *([mode_R] if mode_R is not None else []))
    target = 2.0 * mode_L.omega0
    detuning = (drive.omega_drive - target) / target
    if abs(detuning) > RESONANCE_RTOL:
        raise ResonanceError(
            f"drive {drive.omega_drive!r} is detuned by {detuning:.3e} (relative) from "
            f"2*Omega_L = {target!r}; use the oracle engine for detuned drives")
    xi = squeezing_parameter(drive.epsilon, mode_L)
    chi = 0.0 if mode_R is None else velocity_parameter(geom, drive.epsilon, mode_L, mode_R)
    return EffectiveParams(xi, chi, mode_L, mode_R, drive.omega_drive)


def coupling_data(geom: CavityGeometry, drive: DriveSpec, modes: Sequence[Mode],
                  resonant_pair: Optional[tuple[int, int]] = None) -> CouplingData:
    m = geometry_matrix(geom, modes)
    amp = np.array([2.0 * drive.epsilon * md.omega_x ** 2 for md in modes])
    return CouplingData(m, amp, resonant_pair)
