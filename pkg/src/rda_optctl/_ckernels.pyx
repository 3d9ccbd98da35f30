# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-marching kernels.  See ``_pykernels`` for the contract."""

from libc.math cimport isfinite
import numpy as np

cdef double NEGATIVITY_FLOOR = -1e-10


def flux_march(const double[::1] w0, const double[:, ::1] h, const double[:, ::1] rate,
               src, double mu, double dx, double dt, double quad, double guard_rate,
               bint dirichlet, bint check_negative, double[:, ::1] out):
    cdef Py_ssize_t nt = out.shape[0]
    cdef Py_ssize_t nx = out.shape[1]
    cdef Py_ssize_t n, i
    cdef double[::1] flux = np.zeros(nx + 1)
    cdef double[::1] vol = np.full(nx, dx)
    cdef const double[:, ::1] g
    cdef bint has_src = src is not None
    cdef double hf, adv, wi, s, new, lo, wmax
    if has_src:
        g = src
    vol[0] = 0.5 * dx
    vol[nx - 1] = 0.5 * dx

    wmax = w0[0]
    for i in range(nx):
        out[0, i] = w0[i]
        if w0[i] > wmax:
            wmax = w0[i]

    for n in range(nt - 1):
        if dt * (guard_rate + 2.0 * quad * wmax) > 0.5:
            return 3, n, wmax
        for i in range(nx - 1):
            hf = 0.5 * (h[n, i] + h[n, i + 1])
            if hf >= 0.0:
                adv = hf * out[n, i]
            else:
                adv = hf * out[n, i + 1]
            flux[i + 1] = -mu * (out[n, i + 1] - out[n, i]) / dx + adv
        lo = 0.0
        for i in range(nx):
            wi = out[n, i]
            s = g[n, i] if has_src else 0.0
            new = wi - dt * (flux[i + 1] - flux[i]) / vol[i] + dt * (wi * (rate[n, i] - quad * wi) + s)
            out[n + 1, i] = new
        if dirichlet:
            out[n + 1, 0] = 0.0
            out[n + 1, nx - 1] = 0.0
        lo = out[n + 1, 0]
        for i in range(nx):
            new = out[n + 1, i]
            if not isfinite(new):
                return 1, n + 1, new
            if new < lo:
                lo = new
            if new > wmax:
                wmax = new
        if check_negative and lo < NEGATIVITY_FLOOR:
            return 2, n + 1, lo
    return 0, nt - 1, wmax


def adjoint_march(const double[:, ::1] h, const double[:, ::1] c, double mu, double dx,
                  double dt, bint dirichlet, double[:, ::1] out):
    cdef Py_ssize_t nt = out.shape[0]
    cdef Py_ssize_t nx = out.shape[1]
    cdef Py_ssize_t k, i
    cdef double left, right, q, d2, d1, b, new
    for i in range(nx):
        out[nt - 1, i] = 0.0
    for k in range(nt - 1, 0, -1):
        for i in range(nx):
            q = out[k, i]
            left = out[k, i - 1] if i > 0 else out[k, 1]
            right = out[k, i + 1] if i < nx - 1 else out[k, nx - 2]
            d2 = (left - 2.0 * q + right) / (dx * dx)
            b = -h[k, i]
            if b > 0.0:
                d1 = (q - left) / dx
            else:
                d1 = (right - q) / dx
            out[k - 1, i] = q + dt * (mu * d2 - b * d1 - c[k, i] * q + 1.0)
        if dirichlet:
            out[k - 1, 0] = 0.0
            out[k - 1, nx - 1] = 0.0
        for i in range(nx):
            if not isfinite(out[k - 1, i]):
                return 1, k - 1, out[k - 1, i]
    return 0, 0, 0.0
