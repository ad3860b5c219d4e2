# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`mitest._kernels_py`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def gamma_series_weights(const double[::1] alphas, const double[::1] ratios, double log_c,
                         double tol, Py_ssize_t max_terms):
    """Mixture weights ``C * delta_k`` of the sum-of-gammas series.

    Returns ``(weights, remainder, converged)``.
    """
    cdef Py_ssize_t g, k, ng = alphas.shape[0]
    cdef double total, acc, remainder
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(max_terms + 1)
    cdef double[::1] w = out
    cdef double[::1] s = np.zeros(ng)

    w[0] = exp(log_c)
    total = w[0]
    k = 0
    while 1.0 - total >= tol and k < max_terms:
        k += 1
        acc = 0.0
        for g in range(ng):
            s[g] = ratios[g] * (s[g] + w[k - 1])
            acc += alphas[g] * s[g]
        w[k] = acc / k
        total += w[k]
    remainder = 1.0 - total
    if remainder < 0.0:
        remainder = 0.0
    return out[:k + 1].copy(), remainder, remainder < tol


def g2_counts(const cnp.int64_t[:, :] counts):
    cdef Py_ssize_t i, j, ni = counts.shape[0], nj = counts.shape[1]
    cdef double n = 0.0, acc = 0.0, c
    cdef double[::1] rows = np.zeros(ni)
    cdef double[::1] cols = np.zeros(nj)
    for j in range(nj):
        for i in range(ni):
            c = <double>counts[i, j]
            rows[i] += c
            cols[j] += c
            n += c
    for j in range(nj):
        for i in range(ni):
            c = <double>counts[i, j]
            if c > 0.0:
                acc += c * log(c * n / (rows[i] * cols[j]))
    return 2.0 * acc


def pearson_counts(const cnp.int64_t[:, :] counts):
    cdef Py_ssize_t i, j, ni = counts.shape[0], nj = counts.shape[1]
    cdef double n = 0.0, acc = 0.0, c, e
    cdef double[::1] rows = np.zeros(ni)
    cdef double[::1] cols = np.zeros(nj)
    for j in range(nj):
        for i in range(ni):
            c = <double>counts[i, j]
            rows[i] += c
            cols[j] += c
            n += c
    for j in range(nj):
        for i in range(ni):
            e = rows[i] * cols[j] / n
            if e <= 0.0:
                raise ZeroDivisionError("zero expected count")
            c = <double>counts[i, j] - e
            acc += c * c / e
    return acc


def crosstab_codes(const cnp.int64_t[::1] x, const cnp.int64_t[::1] y, Py_ssize_t ni, Py_ssize_t nj):
    cdef Py_ssize_t k, m = x.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.zeros((ni, nj), dtype=np.int64)
    cdef cnp.int64_t[:, :] view = out
    for k in range(m):
        if x[k] < 0 or x[k] >= ni or y[k] < 0 or y[k] >= nj:
            raise IndexError("category code out of range")
        view[x[k], y[k]] += 1
    return out
