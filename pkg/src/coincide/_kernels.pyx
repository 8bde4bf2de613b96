# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()


def support_eval(U, exps, degs, coeffs, B, int order):
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef long[:, ::1] ex = np.ascontiguousarray(exps, dtype=np.int64).reshape(-1, u.shape[1]) if len(exps) else np.zeros((0, u.shape[1]), dtype=np.int64)
    cdef long[::1] dg = np.ascontiguousarray(degs, dtype=np.int64)
    cdef double[::1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t N = u.shape[0], d = u.shape[1], M = cf.shape[0]
    cdef Py_ssize_t n, i, j, l, a, kdeg, maxdeg = 0
    cdef double s, r, q, mval, gi, wil, rk, ca, cb, t

    h_arr = np.empty(N)
    cdef double[::1] h = h_arr
    g_arr = np.zeros((N, d)) if order >= 1 else None
    H_arr = np.zeros((N, d, d)) if order >= 2 else None
    cdef double[:, ::1] g
    cdef double[:, :, ::1] H
    if order >= 1:
        g = g_arr
    if order >= 2:
        H = H_arr

    for a in range(M):
        if dg[a] > maxdeg:
            maxdeg = dg[a]
    cdef int maxe = 0
    for a in range(M):
        for j in range(d):
            if ex[a, j] > maxe:
                maxe = ex[a, j]

    bu_arr = np.empty(d)
    cdef double[::1] bu = bu_arr
    # per-degree accumulators of P_k, grad P_k, hess P_k
    Qk_arr = np.zeros(maxdeg + 1)
    Gk_arr = np.zeros((maxdeg + 1, d))
    Wk_arr = np.zeros((maxdeg + 1, d, d))
    pw_arr = np.ones((d, maxe + 1))
    cdef double[::1] Qk = Qk_arr
    cdef double[:, ::1] Gk = Gk_arr
    cdef double[:, :, ::1] Wk = Wk_arr
    cdef double[:, ::1] pw = pw_arr
    cdef long e, e2

    for n in range(N):
        s = 0.0
        for i in range(d):
            t = 0.0
            for j in range(d):
                t += b[i, j] * u[n, j]
            bu[i] = t
            s += t * u[n, i]
        s = sqrt(s)
        h[n] = s
        if order >= 1:
            for i in range(d):
                g[n, i] = bu[i] / s
        if order >= 2:
            for i in range(d):
                for j in range(d):
                    H[n, i, j] = b[i, j] / s - bu[i] * bu[j] / (s * s * s)
        if M == 0:
            continue

        r = 0.0
        for i in range(d):
            r += u[n, i] * u[n, i]
        r = sqrt(r)
        for j in range(d):
            pw[j, 0] = 1.0
            for e in range(1, maxe + 1):
                pw[j, e] = pw[j, e - 1] * u[n, j]
        for kdeg in range(maxdeg + 1):
            Qk[kdeg] = 0.0
            for i in range(d):
                Gk[kdeg, i] = 0.0
                for l in range(d):
                    Wk[kdeg, i, l] = 0.0

        for a in range(M):
            kdeg = dg[a]
            mval = cf[a]
            for j in range(d):
                mval *= pw[j, ex[a, j]]
            Qk[kdeg] += mval
            if order >= 1:
                for i in range(d):
                    e = ex[a, i]
                    if e == 0:
                        continue
                    gi = cf[a] * e * pw[i, e - 1]
                    for j in range(d):
                        if j != i:
                            gi *= pw[j, ex[a, j]]
                    Gk[kdeg, i] += gi
            if order >= 2:
                for i in range(d):
                    for l in range(i, d):
                        if i == l:
                            e = ex[a, i]
                            if e < 2:
                                continue
                            wil = cf[a] * e * (e - 1) * pw[i, e - 2]
                            for j in range(d):
                                if j != i:
                                    wil *= pw[j, ex[a, j]]
                        else:
                            e = ex[a, i]
                            e2 = ex[a, l]
                            if e == 0 or e2 == 0:
                                continue
                            wil = cf[a] * e * e2 * pw[i, e - 1] * pw[l, e2 - 1]
                            for j in range(d):
                                if j != i and j != l:
                                    wil *= pw[j, ex[a, j]]
                        Wk[kdeg, i, l] += wil

        for kdeg in range(maxdeg + 1):
            q = Qk[kdeg]
            rk = pow(r, 1.0 - kdeg)
            h[n] += q * rk
            if order >= 1:
                ca = (1.0 - kdeg) * pow(r, -1.0 - kdeg)
                for i in range(d):
                    g[n, i] += Gk[kdeg, i] * rk + q * ca * u[n, i]
                if order >= 2:
                    cb = (1.0 - kdeg) * (-1.0 - kdeg) * pow(r, -3.0 - kdeg)
                    for i in range(d):
                        for l in range(d):
                            if l >= i:
                                wil = Wk[kdeg, i, l]
                            else:
                                wil = Wk[kdeg, l, i]
                            t = wil * rk + ca * (Gk[kdeg, i] * u[n, l] + u[n, i] * Gk[kdeg, l])
                            t += q * cb * u[n, i] * u[n, l]
                            if i == l:
                                t += q * ca
                            H[n, i, l] += t
    return h_arr, g_arr, H_arr


def segment_distances(x, A, B):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] bb = np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t N = a.shape[0], d = a.shape[1], n, i
    cdef double ee, we, t, rr, ei, wi
    out_arr = np.empty(N)
    cdef double[::1] out = out_arr
    for n in range(N):
        ee = 0.0
        we = 0.0
        for i in range(d):
            ei = a[n, i] - bb[n, i]
            wi = xv[i] - bb[n, i]
            ee += ei * ei
            we += wi * ei
        t = we / ee
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        rr = 0.0
        for i in range(d):
            wi = xv[i] - bb[n, i] - t * (a[n, i] - bb[n, i])
            rr += wi * wi
        out[n] = sqrt(rr)
    return out_arr
