# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernel; mirrors _pk.score_block exactly."""

import numpy as np

cimport numpy as cnp


def score_block(cnp.int32_t[:, ::1] values, cnp.uint8_t[:, ::1] member,
                double[::1] weights):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t a = values.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(a):
            # same term order and arithmetic as the pure kernel
            s = s + weights[j] * (1.0 - <double> member[j, values[i, j]])
        o[i] = s
    return out
