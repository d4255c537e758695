"""Geometries tuned so the cavity mode has an exactly resonant reservoir partner.

With a drive at twice the cavity frequency the velocity coupling is resonant
when a reservoir mode sits at three times the cavity frequency.  Mirror
leakage shifts both frequencies, so the reservoir length is solved for
numerically instead of being set from the ideal-cavity ladder.
"""
from __future__ import annotations

import math
from typing import Optional

from scipy.optimize import brentq

from .errors import SpectralError
from .spectral import CavityGeometry, Dominance, Mode, spectrum


def resonant_pair(geom: CavityGeometry, ratio: float = 3.0) -> tuple[Mode, Mode]:
    """Lowest cavity mode and the reservoir mode closest to ``ratio`` times it."""
    guess = ratio * math.hypot(math.pi / geom.left_length, geom.k_perp)
    modes = spectrum(geom, math.sqrt(guess ** 2 - geom.k_perp ** 2) * 1.3 + 1.0)
    left = next(m for m in modes if m.dominance is Dominance.LEFT)
    target = ratio * left.omega0
    right = [m for m in modes if m.dominance is Dominance.RIGHT]
    if not right:
        raise SpectralError("no reservoir mode below the search ceiling")
    return left, min(right, key=lambda m: abs(m.omega0 - target))


def resonant_geometry(left_length: float, k_perp: float, gamma: float, ratio: float = 3.0,
                      nominal_right: Optional[float] = None, a0: float = 0.0) -> CavityGeometry:
    """Geometry whose reservoir partner satisfies ``W_R = ratio * W_L`` exactly."""
    if nominal_right is None:
        nominal_right = 3.0 * left_length
    w_l = math.pi / left_length
    w_rx = math.sqrt(ratio ** 2 * (w_l ** 2 + k_perp ** 2) - k_perp ** 2)
    order = max(1, round(w_rx * nominal_right / math.pi))
    d2_guess = order * math.pi / w_rx
    b = a0 + left_length

    def mismatch(d2):
        g = CavityGeometry(a0, b, b + d2, gamma, k_perp)
        left, right = resonant_pair(g, ratio)
        return right.omega0 - ratio * left.omega0

    width = 0.25 * math.pi / w_rx / d2_guess  # a quarter of the local level spacing
    lo, hi = d2_guess * (1 - width), d2_guess * (1 + 0.1 * width)
    d2 = brentq(mismatch, lo, hi, xtol=1e-15 * d2_guess, rtol=1e-15, maxiter=200)
    return CavityGeometry(a0, b, b + d2, gamma, k_perp)


def geometry_for_eta(left_length: float, k_perp: float, eta: float, ratio: float = 3.0,
                     nominal_right: Optional[float] = None, a0: float = 0.0,
                     maxiter: int = 50) -> CavityGeometry:
    """Tuned geometry whose cavity mode has transparency ``W_L^x / gamma = eta``."""
    gamma = math.pi / (left_length * eta)
    for _ in range(maxiter):
        g = resonant_geometry(left_length, k_perp, gamma, ratio, nominal_right, a0)
        new = resonant_pair(g, ratio)[0].omega_x / eta
        if abs(new - gamma) <= 1e-15 * gamma:
            return g
        gamma = new
    raise SpectralError("mirror strength for the requested eta did not converge")
