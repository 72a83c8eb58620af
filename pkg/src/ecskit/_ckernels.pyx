# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the batched tensor kernels in ``_pykernels``.

Same signatures, same index layouts; see that module for the conventions.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double f64


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def christoffel(ginv, dg):
    cdef f64[:, :, ::1] gi = _c(ginv)
    cdef f64[:, :, :, ::1] d = _c(dg)
    cdef Py_ssize_t N = d.shape[0], n = d.shape[1]
    out_arr = np.zeros((N, n, n, n))
    cdef f64[:, :, :, ::1] out = out_arr
    cdef f64[:, ::1] low = np.empty((n, n * n))
    cdef Py_ssize_t p, k, l, i, j
    cdef f64 acc
    for p in range(N):
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    low[l, i * n + j] = 0.5 * (d[p, l, j, i] + d[p, l, i, j] - d[p, i, j, l])
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    acc = 0.0
                    for l in range(n):
                        acc = acc + gi[p, k, l] * low[l, i * n + j]
                    out[p, k, i, j] = acc
                    out[p, k, j, i] = acc
    return out_arr


def christoffel_derivative(ginv, dg, ddg):
    cdef f64[:, :, ::1] gi = _c(ginv)
    cdef f64[:, :, :, ::1] d = _c(dg)
    cdef f64[:, :, :, :, ::1] dd = _c(ddg)
    cdef Py_ssize_t N = d.shape[0], n = d.shape[1]
    out_arr = np.zeros((N, n, n, n, n))
    cdef f64[:, :, :, :, ::1] out = out_arr
    cdef f64[:, :, ::1] low = np.empty((n, n, n))
    cdef f64[:, :, :, ::1] dlow = np.empty((n, n, n, n))
    cdef f64[:, :, ::1] dgi = np.empty((n, n, n))
    cdef f64[:, ::1] tmp = np.empty((n, n))
    cdef Py_ssize_t p, k, l, i, j, m, a, b
    cdef f64 acc
    for p in range(N):
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    low[l, i, j] = 0.5 * (d[p, l, j, i] + d[p, l, i, j] - d[p, i, j, l])
                    for m in range(n):
                        dlow[l, i, j, m] = 0.5 * (
                            dd[p, l, j, i, m] + dd[p, l, i, j, m] - dd[p, i, j, l, m]
                        )
        # d_m ginv^kl = -ginv^ka d_m g_ab ginv^bl
        for m in range(n):
            for k in range(n):
                for b in range(n):
                    acc = 0.0
                    for a in range(n):
                        acc = acc + gi[p, k, a] * d[p, a, b, m]
                    tmp[k, b] = acc
            for k in range(n):
                for l in range(n):
                    acc = 0.0
                    for b in range(n):
                        acc = acc + tmp[k, b] * gi[p, b, l]
                    dgi[k, l, m] = -acc
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    for m in range(n):
                        acc = 0.0
                        for l in range(n):
                            acc = acc + dgi[k, l, m] * low[l, i, j] + gi[p, k, l] * dlow[l, i, j, m]
                        out[p, k, i, j, m] = acc
                        out[p, k, j, i, m] = acc
    return out_arr


def riemann(gamma, dgamma):
    cdef f64[:, :, :, ::1] G = _c(gamma)
    cdef f64[:, :, :, :, ::1] dG = _c(dgamma)
    cdef Py_ssize_t N = G.shape[0], n = G.shape[1]
    out_arr = np.zeros((N, n, n, n, n))
    cdef f64[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t p, k, l, i, j, m
    cdef f64 acc
    for p in range(N):
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    for j in range(i + 1, n):
                        acc = dG[p, k, j, l, i] - dG[p, k, i, l, j]
                        for m in range(n):
                            acc = acc + G[p, k, i, m] * G[p, m, j, l] - G[p, k, j, m] * G[p, m, i, l]
                        out[p, k, l, i, j] = acc
                        out[p, k, l, j, i] = -acc
    return out_arr


def lower_first(g, rup):
    cdef f64[:, :, ::1] gg = _c(g)
    cdef f64[:, :, :, :, ::1] R = _c(rup)
    cdef Py_ssize_t N = R.shape[0], n = R.shape[1]
    out_arr = np.zeros((N, n, n, n, n))
    cdef f64[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t p, k, l, i, j, a
    cdef f64 acc
    for p in range(N):
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for a in range(n):
                            acc = acc + gg[p, k, a] * R[p, a, l, i, j]
                        out[p, k, l, i, j] = acc
    return out_arr


def weyl(g, rdown, ricci, scalar):
    cdef f64[:, :, ::1] gg = _c(g)
    cdef f64[:, :, :, :, ::1] R = _c(rdown)
    cdef f64[:, :, ::1] rc = _c(ricci)
    cdef f64[::1] s = _c(scalar)
    cdef Py_ssize_t N = R.shape[0], n = R.shape[1]
    out_arr = np.zeros((N, n, n, n, n))
    cdef f64[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t p, k, l, i, j
    cdef f64 c1 = 1.0 / (n - 2), c2 = 1.0 / ((n - 1) * (n - 2))
    for p in range(N):
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    for j in range(n):
                        out[p, k, l, i, j] = (
                            R[p, k, l, i, j]
                            - c1 * (
                                rc[p, k, i] * gg[p, l, j] + rc[p, l, j] * gg[p, k, i]
                                - rc[p, k, j] * gg[p, l, i] - rc[p, l, i] * gg[p, k, j]
                            )
                            + c2 * s[p] * (gg[p, k, i] * gg[p, l, j] - gg[p, k, j] * gg[p, l, i])
                        )
    return out_arr


def covariant_derivative4(t, dt, gamma):
    cdef f64[:, :, :, :, ::1] T = _c(t)
    cdef f64[:, :, :, :, :, ::1] dT = _c(dt)
    cdef f64[:, :, :, ::1] G = _c(gamma)
    cdef Py_ssize_t N = T.shape[0], n = T.shape[1]
    out_arr = np.array(dT, dtype=np.float64, copy=True)
    cdef f64[:, :, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t p, m, a, b, c, d, e
    cdef f64 acc
    for p in range(N):
        for m in range(n):
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        for d in range(n):
                            acc = 0.0
                            for e in range(n):
                                acc = acc + (
                                    G[p, e, m, a] * T[p, e, b, c, d]
                                    + G[p, e, m, b] * T[p, a, e, c, d]
                                    + G[p, e, m, c] * T[p, a, b, e, d]
                                    + G[p, e, m, d] * T[p, a, b, c, e]
                                )
                            out[p, m, a, b, c, d] -= acc
    return out_arr


def covariant_derivative2(t, dt, gamma):
    cdef f64[:, :, ::1] T = _c(t)
    cdef f64[:, :, :, ::1] dT = _c(dt)
    cdef f64[:, :, :, ::1] G = _c(gamma)
    cdef Py_ssize_t N = T.shape[0], n = T.shape[1]
    out_arr = np.array(dT, dtype=np.float64, copy=True)
    cdef f64[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t p, m, a, b, e
    cdef f64 acc
    for p in range(N):
        for m in range(n):
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for e in range(n):
                        acc = acc + G[p, e, m, a] * T[p, e, b] + G[p, e, m, b] * T[p, a, e]
                    out[p, m, a, b] -= acc
    return out_arr


def semisymmetry_max(rup, rdown):
    cdef f64[:, :, :, :, ::1] Ru = _c(rup)
    cdef f64[:, :, :, :, ::1] Rd = _c(rdown)
    cdef Py_ssize_t N = Ru.shape[0], n = Ru.shape[1]
    out_arr = np.zeros(N)
    cdef f64[::1] out = out_arr
    cdef Py_ssize_t p, a, b, k, l, i, j, m
    cdef f64 acc, best
    for p in range(N):
        best = 0.0
        # antisymmetric in (a, b): a < b suffices
        for a in range(n):
            for b in range(a + 1, n):
                for k in range(n):
                    for l in range(n):
                        for i in range(n):
                            for j in range(n):
                                acc = 0.0
                                for m in range(n):
                                    acc = acc + (
                                        Ru[p, m, k, a, b] * Rd[p, m, l, i, j]
                                        + Ru[p, m, l, a, b] * Rd[p, k, m, i, j]
                                        + Ru[p, m, i, a, b] * Rd[p, k, l, m, j]
                                        + Ru[p, m, j, a, b] * Rd[p, k, l, i, m]
                                    )
                                if acc < 0:
                                    acc = -acc
                                if acc > best:
                                    best = acc
        out[p] = best
    return out_arr
