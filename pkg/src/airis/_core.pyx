# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see :mod:`airis._fallback` for the reference versions."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def exp_series_coeffs(double[:, ::1] c):
    """Taylor coefficients of ``exp(sum_j c[:, j] t^j)`` (column 0 ignored).

    Row-wise recurrence ``n b_n = sum_{j=1}^{n} j c_j b_{n-j}``, ``b_0 = 1``.
    """
    cdef Py_ssize_t nx = c.shape[0]
    cdef Py_ssize_t width = c.shape[1]
    out = np.zeros((nx, width), dtype=np.float64)
    jc_buf = np.empty(width, dtype=np.float64)
    cdef double[:, ::1] b = out
    cdef double[::1] jc_view = jc_buf
    cdef double* jc = &jc_view[0]
    cdef double* row
    cdef const double* crow
    cdef Py_ssize_t i, n, j
    cdef double a0, a1, a2, a3
    if nx == 0:
        return out
    for i in range(nx):
        crow = &c[i, 0]
        row = &b[i, 0]
        for j in range(width):
            jc[j] = j * crow[j]
        row[0] = 1.0
        for n in range(1, width):
            # four independent partial sums keep the FPU pipeline full
            a0 = a1 = a2 = a3 = 0.0
            j = 1
            while j + 3 <= n:
                a0 += jc[j] * row[n - j]
                a1 += jc[j + 1] * row[n - j - 1]
                a2 += jc[j + 2] * row[n - j - 2]
                a3 += jc[j + 3] * row[n - j - 3]
                j += 4
            while j <= n:
                a0 += jc[j] * row[n - j]
                j += 1
            row[n] = ((a0 + a1) + (a2 + a3)) / n
    return out


def markov_trace(double p01, double p10, double[::1] u, int init):
    """Two-state chain driven by uniforms ``u``; state 0 = blocked.

    From state 0 the chain moves to 1 when ``u < p01``; from state 1 it moves
    to 0 when ``u < p10``.
    """
    cdef Py_ssize_t n = u.shape[0]
    out = np.empty(n, dtype=np.int8)
    cdef cnp.int8_t[::1] s = out
    cdef int state = init
    cdef Py_ssize_t t
    for t in range(n):
        if state == 0:
            if u[t] < p01:
                state = 1
        else:
            if u[t] < p10:
                state = 0
        s[t] = state
    return out
