# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled truncated Taylor kernels (same contracts as _pykernels)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _mul_row(const double[:, ::1] a, const double[:, ::1] b, Py_ssize_t r,
                   const cnp.int64_t[::1] ia, const cnp.int64_t[::1] ib,
                   const cnp.int64_t[::1] ic, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t p, m = out.shape[1]
    for p in range(m):
        out[r, p] = 0.0
    for p in range(ia.shape[0]):
        out[r, ic[p]] += a[r, ia[p]] * b[r, ib[p]]


def taylor_mul(const double[:, ::1] a, const double[:, ::1] b, const cnp.int64_t[::1] ia,
               const cnp.int64_t[::1] ib, const cnp.int64_t[::1] ic, Py_ssize_t m):
    cdef Py_ssize_t n = a.shape[0], r
    out = np.empty((n, m))
    cdef double[:, ::1] o = out
    with nogil:
        for r in range(n):
            _mul_row(a, b, r, ia, ib, ic, o)
    return out


def series_eval(const double[:, ::1] d, const double[:, ::1] coeffs, const cnp.int64_t[::1] ia,
                const cnp.int64_t[::1] ib, const cnp.int64_t[::1] ic, Py_ssize_t m):
    cdef Py_ssize_t n = d.shape[0], deg = coeffs.shape[1] - 1
    cdef Py_ssize_t r, k, j, p
    out = np.zeros((n, m))
    tmp = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef double[:, ::1] t = tmp
    with nogil:
        for r in range(n):
            for j in range(m):
                o[r, j] = 0.0
            o[r, 0] = coeffs[r, deg]
            for k in range(deg - 1, -1, -1):
                for j in range(m):
                    t[r, j] = 0.0
                for p in range(ia.shape[0]):
                    t[r, ic[p]] += o[r, ia[p]] * d[r, ib[p]]
                for j in range(m):
                    o[r, j] = t[r, j]
                o[r, 0] += coeffs[r, k]
    return out
