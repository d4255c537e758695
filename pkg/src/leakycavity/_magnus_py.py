"""Pure-NumPy fourth-order Magnus integrator for the mode transfer matrix.

Works in scaled quadratures ``q = sqrt(W) Q``, ``p = P / sqrt(W)`` so that
every generator entry is of the order of a mode frequency.
"""
import math

import numpy as np

_SQRT3 = math.sqrt(3.0)
_C1 = 0.5 - _SQRT3 / 6.0
_C2 = 0.5 + _SQRT3 / 6.0
TAYLOR_DEGREE = 12
TAYLOR_RADIUS = 0.25


def _expm_taylor(a):
    norm = np.abs(a).sum(axis=1).max()
    squarings = 0
    if norm > TAYLOR_RADIUS:
        squarings = int(math.ceil(math.log2(norm / TAYLOR_RADIUS)))
        a = a / (2.0 ** squarings)
    eye = np.eye(a.shape[0])
    e = eye
    for k in range(TAYLOR_DEGREE, 0, -1):
        e = eye + (a @ e) / k
    for _ in range(squarings):
        e = e @ e
    return e


def magnus4_transfer(omega, dw2_amp, kmat, omega_drive, t0, h, nsteps, s_init):
    """Advance ``s_init`` by ``nsteps`` Magnus steps of size ``h`` from ``t0``."""
    omega = np.ascontiguousarray(omega, dtype=float)
    dw2_amp = np.ascontiguousarray(dw2_amp, dtype=float)
    kmat = np.ascontiguousarray(kmat, dtype=float)
    n = omega.size
    base = np.zeros((2 * n, 2 * n))
    base[:n, n:] = np.diag(omega)
    diag = np.arange(n)
    s = np.array(s_init, dtype=float, copy=True)

    def generator(t):
        g = base.copy()
        k = kmat * math.cos(omega_drive * t)
        g[:n, :n] = k
        g[n:, n:] = -k.T
        g[n + diag, diag] = -(omega + dw2_amp * math.sin(omega_drive * t) / omega)
        return g

    coef = _SQRT3 / 12.0 * h * h
    for step in range(nsteps):
        t = t0 + step * h
        g1 = generator(t + _C1 * h)
        g2 = generator(t + _C2 * h)
        om = 0.5 * h * (g1 + g2) + coef * (g2 @ g1 - g1 @ g2)
        s = _expm_taylor(om) @ s
    return s
