# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled four-bar kernels.

Same contract as ``mechsyn._kernels_py``; see that module for the argument
layout. Rows are independent mechanisms, columns are crank angles.
"""
import numpy as np

from libc.math cimport atan2, cos, sin, sqrt, isfinite


cdef inline bint _solve(const double* p, double psi, double* px, double* py,
                        double* theta) noexcept nogil:
    cdef double x0 = p[0], y0 = p[1], r1 = p[2], r2 = p[3], r3 = p[4], r4 = p[5]
    cdef double rcx = p[6], rcy = p[7], g = p[8]
    cdef double L1, L2, L3, c, s, KA, KB, KC, disc, th, a, b, ny, nx, cy, cx
    if r1 <= 0.0 or r2 <= 0.0 or r3 <= 0.0 or r4 <= 0.0:
        return False
    L3 = (r4 * r4 - r1 * r1 - r2 * r2 - r3 * r3) / (2.0 * r2 * r3)
    L2 = r1 / r3
    L1 = r1 / r2
    c = cos(psi)
    s = sin(psi)
    KA = c - L1 + L2 * c + L3
    KB = -2.0 * s
    KC = L1 + (L2 - 1.0) * c + L3
    disc = KB * KB - 4.0 * KA * KC
    if not (disc >= 0.0):
        return False
    # minus-branch root of the half-angle quadratic; the conjugate form
    # 2KC / (-KB + sqrt(disc)) is the same root and stays defined when KA -> 0
    ny = -KB - sqrt(disc)
    nx = 2.0 * KA
    cy = 2.0 * KC
    cx = -KB + sqrt(disc)
    if ny * ny + nx * nx >= cy * cy + cx * cx:
        th = 2.0 * atan2(ny, nx)
    else:
        th = 2.0 * atan2(cy, cx)
    a = r2 * c + rcx * cos(th) - rcy * sin(th)
    b = r2 * s + rcx * sin(th) + rcy * cos(th)
    px[0] = x0 + cos(g) * a - sin(g) * b
    py[0] = y0 + sin(g) * a + cos(g) * b
    theta[0] = th
    return isfinite(px[0]) and isfinite(py[0])


def path_fob(const double[:, ::1] params, const double[:, ::1] psi,
             const double[::1] xd, const double[::1] yd, double penalty):
    cdef Py_ssize_t n = params.shape[0], K = psi.shape[1], i, k
    cdef double acc, px, py, th, ex, ey
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if psi.shape[0] != n or xd.shape[0] != K or yd.shape[0] != K:
        raise ValueError("shape mismatch between params, psi and targets")
    if params.shape[1] != 9:
        raise ValueError("params must have 9 columns")
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(K):
                if not _solve(&params[i, 0], psi[i, k], &px, &py, &th):
                    acc = penalty
                    break
                ex = xd[k] - px
                ey = yd[k] - py
                acc = acc + ex * ex + ey * ey
            o[i] = acc
    return out


def coupler_states(const double[:, ::1] params, const double[:, ::1] psi):
    cdef Py_ssize_t n = params.shape[0], K = psi.shape[1], i, k
    cdef double px, py, th
    if psi.shape[0] != n:
        raise ValueError("params and psi row counts differ")
    if params.shape[1] != 9:
        raise ValueError("params must have 9 columns")
    PX = np.full((n, K), np.nan)
    PY = np.full((n, K), np.nan)
    TH = np.full((n, K), np.nan)
    OK = np.zeros((n, K), dtype=np.bool_)
    cdef double[:, ::1] vx = PX, vy = PY, vt = TH
    cdef unsigned char[:, ::1] vok = OK.view(np.uint8)
    with nogil:
        for i in range(n):
            for k in range(K):
                if _solve(&params[i, 0], psi[i, k], &px, &py, &th):
                    vx[i, k] = px
                    vy[i, k] = py
                    vt[i, k] = th
                    vok[i, k] = 1
    return PX, PY, TH, OK
