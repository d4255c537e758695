# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fourth-order Magnus integrator; mirrors ``_magnus_py``."""
import numpy as np
from libc.math cimport sin, cos, sqrt, log2, ceil, fabs

cdef int TAYLOR_DEGREE = 12
cdef double TAYLOR_RADIUS = 0.25


cdef void _matmul(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out, int m) noexcept nogil:
    cdef int i, j, k
    cdef double acc, aik
    for i in range(m):
        for j in range(m):
            out[i, j] = 0.0
        for k in range(m):
            aik = a[i, k]
            if aik != 0.0:
                for j in range(m):
                    out[i, j] += aik * b[k, j]


cdef void _generator(double[:, ::1] g, double[::1] omega, double[::1] dw2,
                     double[:, ::1] kmat, double wd, double t, int n) noexcept nogil:
    cdef int i, j, m = 2 * n
    cdef double cw = cos(wd * t), sw = sin(wd * t)
    for i in range(m):
        for j in range(m):
            g[i, j] = 0.0
    for i in range(n):
        g[i, n + i] = omega[i]
        g[n + i, i] = -(omega[i] + dw2[i] * sw / omega[i])
        for j in range(n):
            g[i, j] = kmat[i, j] * cw
            g[n + i, n + j] = -kmat[j, i] * cw


cdef void _expm_taylor(double[:, ::1] a, double[:, ::1] e, double[:, ::1] tmp, int m) noexcept nogil:
    cdef int i, j, k, q, squarings = 0
    cdef double norm = 0.0, row, scale
    for i in range(m):
        row = 0.0
        for j in range(m):
            row += fabs(a[i, j])
        if row > norm:
            norm = row
    if norm > TAYLOR_RADIUS:
        squarings = <int> ceil(log2(norm / TAYLOR_RADIUS))
        scale = 1.0
        for q in range(squarings):
            scale *= 0.5
        for i in range(m):
            for j in range(m):
                a[i, j] *= scale
    for i in range(m):
        for j in range(m):
            e[i, j] = 1.0 if i == j else 0.0
    for k in range(TAYLOR_DEGREE, 0, -1):
        _matmul(a, e, tmp, m)
        for i in range(m):
            for j in range(m):
                e[i, j] = tmp[i, j] / k + (1.0 if i == j else 0.0)
    for q in range(squarings):
        _matmul(e, e, tmp, m)
        for i in range(m):
            for j in range(m):
                e[i, j] = tmp[i, j]


def magnus4_transfer(omega, dw2_amp, kmat, double omega_drive, double t0, double h,
                     long nsteps, s_init):
    """Advance ``s_init`` by ``nsteps`` Magnus steps of size ``h`` from ``t0``."""
    cdef double[::1] om_v = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[::1] dw_v = np.ascontiguousarray(dw2_amp, dtype=np.float64)
    cdef double[:, ::1] k_v = np.ascontiguousarray(kmat, dtype=np.float64)
    cdef int n = om_v.shape[0]
    cdef int m = 2 * n
    s_np = np.array(s_init, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] s = s_np
    cdef double[:, ::1] g1 = np.zeros((m, m))
    cdef double[:, ::1] g2 = np.zeros((m, m))
    cdef double[:, ::1] c12 = np.zeros((m, m))
    cdef double[:, ::1] c21 = np.zeros((m, m))
    cdef double[:, ::1] a = np.zeros((m, m))
    cdef double[:, ::1] e = np.zeros((m, m))
    cdef double[:, ::1] tmp = np.zeros((m, m))
    cdef double s3 = sqrt(3.0)
    cdef double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0
    cdef double coef = s3 / 12.0 * h * h
    cdef long step
    cdef int i, j
    cdef double t
    with nogil:
        for step in range(nsteps):
            t = t0 + step * h
            _generator(g1, om_v, dw_v, k_v, omega_drive, t + c1 * h, n)
            _generator(g2, om_v, dw_v, k_v, omega_drive, t + c2 * h, n)
            _matmul(g2, g1, c21, m)
            _matmul(g1, g2, c12, m)
            for i in range(m):
                for j in range(m):
                    a[i, j] = 0.5 * h * (g1[i, j] + g2[i, j]) + coef * (c21[i, j] - c12[i, j])
            _expm_taylor(a, e, tmp, m)
            _matmul(e, s, tmp, m)
            for i in range(m):
                for j in range(m):
                    s[i, j] = tmp[i, j]
    return s_np
