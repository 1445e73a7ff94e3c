# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_fallback.py`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fmin, fmax

cnp.import_array()

BACKEND = "cython"


cdef void _mod_into(const double[:, ::1] R, const double[:, ::1] C,
                    const double[::1] w_r, const double[::1] w_c,
                    double r_gain, double c_gain, double scale,
                    double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = R.shape[0], m = C.shape[0], d = R.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, fr
    cdef double inv_d = 1.0 / d
    cdef double gcoef = scale * r_gain * c_gain * inv_d
    # f_c is shared by every row; stash it in the first row, then broadcast
    for j in range(m):
        acc = 0.0
        for k in range(d):
            acc += w_c[k] * C[j, k]
        out[0, j] = c_gain * acc * inv_d
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for k in range(d):
            acc += w_r[k] * R[i, k]
        fr = r_gain * acc * inv_d
        for j in range(m):
            acc = 0.0
            for k in range(d):
                acc += R[i, k] * C[j, k]
            out[i, j] = fr + out[0, j] + gcoef * acc


def mod_matrix(const double[:, ::1] R, const double[:, ::1] C,
               const double[::1] w_r, const double[::1] w_c,
               double r_gain, double c_gain, double scale):
    cdef Py_ssize_t n = R.shape[0], m = C.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        _mod_into(R, C, w_r, w_c, r_gain, c_gain, scale, o)
    return out


def precision_matrix(const double[:, ::1] R, const double[:, ::1] C,
                     const double[::1] w_r, const double[::1] w_c,
                     double r_gain, double c_gain, double scale, double pi_min):
    cdef Py_ssize_t n = R.shape[0], m = C.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        _mod_into(R, C, w_r, w_c, r_gain, c_gain, scale, o)
        for i in range(n):
            for j in range(m):
                o[i, j] = fmin(1.0, fmax(pi_min, o[i, j]))
    return out


def attention(const double[:, ::1] Q, const double[:, ::1] K,
              const double[:, ::1] V, pi=None):
    cdef Py_ssize_t n = Q.shape[0], m = K.shape[0], d = Q.shape[1], dv = V.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, mx, tot
    cdef double inv_sqrt_d = 1.0 / sqrt(<double>d)
    cdef bint biased = pi is not None
    cdef const double[:, ::1] P
    if biased:
        P = pi
    else:
        P = np.empty((1, 1), dtype=np.float64)
    A_arr = np.empty((n, m), dtype=np.float64)
    out_arr = np.zeros((n, dv), dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            mx = -1e308
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    acc += Q[i, k] * K[j, k]
                acc = acc * inv_sqrt_d
                if biased:
                    acc = acc + log(P[i, j])
                A[i, j] = acc
                if acc > mx:
                    mx = acc
            tot = 0.0
            for j in range(m):
                A[i, j] = exp(A[i, j] - mx)
                tot += A[i, j]
            for j in range(m):
                A[i, j] = A[i, j] / tot
                for k in range(dv):
                    out[i, k] += A[i, j] * V[j, k]
    return out_arr, A_arr


def row_weighted_sum(const double[:, ::1] pi, const double[:, ::1] E):
    cdef Py_ssize_t n = pi.shape[0], m = pi.shape[1], i, j
    cdef double acc
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] r = res
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc += pi[i, j] * E[i, j]
            r[i] = acc
    return res


def gaussian_code(const double[::1] x, const double[::1] centers, double width, double target_sq_norm):
    cdef Py_ssize_t n = x.shape[0], p = centers.shape[0], i, k
    cdef double u, acc, s
    cdef double inv_w = 1.0 / width
    cdef double target = sqrt(target_sq_norm)
    res = np.empty((n, p), dtype=np.float64)
    cdef double[:, ::1] z = res
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(p):
                u = (x[i] - centers[k]) * inv_w
                z[i, k] = exp(-0.5 * u * u)
                acc += z[i, k] * z[i, k]
            s = target / fmax(sqrt(acc), 1e-300)
            for k in range(p):
                z[i, k] = z[i, k] * s
    return res
