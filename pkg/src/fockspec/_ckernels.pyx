# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in :mod:`fockspec._kernels_py`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def resolvent_moments(F, d, zs, double weight=1.0):
    cdef double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(np.atleast_1d(zs), dtype=np.float64)
    cdef Py_ssize_t N = Fv.shape[0], m = Fv.shape[1], Z = zv.shape[0]
    cdef Py_ssize_t P = m * (m + 1) // 2
    # upper-triangle products F[s, k] F[s, l], one contiguous row per node
    cdef double[:, ::1] prod = np.empty((N, P), dtype=np.float64)
    cdef double[::1] acc = np.empty(P, dtype=np.float64)
    out = np.empty((Z, m, m), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t t, s, k, l, j
    cdef double r, zt, fk
    if Z == 1:
        # a single shift: skip the product table
        for t in range(Z):
            for k in range(m):
                for l in range(m):
                    ov[t, k, l] = 0.0
            for s in range(N):
                r = weight / (dv[s] - zv[t])
                for k in range(m):
                    fk = r * Fv[s, k]
                    for l in range(k, m):
                        ov[t, k, l] += fk * Fv[s, l]
            for k in range(m):
                for l in range(k + 1, m):
                    ov[t, l, k] = ov[t, k, l]
        return out
    for s in range(N):
        j = 0
        for k in range(m):
            for l in range(k, m):
                prod[s, j] = Fv[s, k] * Fv[s, l]
                j += 1
    for t in range(Z):
        zt = zv[t]
        for j in range(P):
            acc[j] = 0.0
        for s in range(N):
            r = 1.0 / (dv[s] - zt)
            for j in range(P):
                acc[j] += r * prod[s, j]
        j = 0
        for k in range(m):
            for l in range(k, m):
                ov[t, k, l] = weight * acc[j]
                ov[t, l, k] = weight * acc[j]
                j += 1
    return out


def separable_extrema(left, right, Py_ssize_t chunk=0):
    cdef double[:, ::1] L = np.ascontiguousarray(left, dtype=np.float64)
    # transposed so the inner accumulation runs over contiguous columns
    cdef double[:, ::1] RT = np.ascontiguousarray(np.asarray(right, dtype=np.float64).T)
    cdef Py_ssize_t P = L.shape[0], Q = RT.shape[1], J = L.shape[1]
    cdef double[::1] acc = np.empty(max(Q, 1), dtype=np.float64)
    cdef Py_ssize_t i, j, t, jmin, jmax
    cdef double a, v, rlo, rhi, lo = INFINITY, hi = -INFINITY
    cdef Py_ssize_t ilo = 0, jlo = 0, ihi = 0, jhi = 0
    with nogil:
        for i in range(P):
            a = L[i, 0] if J > 0 else 0.0
            for j in range(Q):
                acc[j] = a * RT[0, j] if J > 0 else 0.0
            for t in range(1, J):
                a = L[i, t]
                for j in range(Q):
                    acc[j] += a * RT[t, j]
            # branch-free reductions first; indices only when the row improves
            rlo = INFINITY
            rhi = -INFINITY
            for j in range(Q):
                v = acc[j]
                rlo = v if v < rlo else rlo
                rhi = v if v > rhi else rhi
            if rlo < lo:
                jmin = 0
                while acc[jmin] != rlo:
                    jmin += 1
                lo = rlo; ilo = i; jlo = jmin
            if rhi > hi:
                jmax = 0
                while acc[jmax] != rhi:
                    jmax += 1
                hi = rhi; ihi = i; jhi = jmax
    return lo, (ilo, jlo), hi, (ihi, jhi)
