# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, lgamma, fabs

cnp.import_array()

BACKEND = "cython"


def branch_log_probs(logp, Py_ssize_t n):
    cdef double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef Py_ssize_t k = lp.shape[0]
    cdef Py_ssize_t total = k ** n
    out_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t[::1] digits = np.zeros(n, dtype=np.intp)
    # prefix[j] = sum of the first j+1 log weights in the current assignment
    cdef double[::1] prefix = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t idx, j, start
    if n == 0:
        return np.zeros(1)
    prefix[0] = lp[0]
    for j in range(1, n):
        prefix[j] = prefix[j - 1] + lp[0]
    for idx in range(total):
        out[idx] = prefix[n - 1]
        # odometer increment, last observer fastest
        j = n - 1
        while j >= 0:
            digits[j] += 1
            if digits[j] < k:
                break
            digits[j] = 0
            j -= 1
        if j < 0:
            break
        start = j
        for j in range(start, n):
            if j == 0:
                prefix[0] = lp[digits[0]]
            else:
                prefix[j] = prefix[j - 1] + lp[digits[j]]
    return out_arr


cdef Py_ssize_t _n_compositions(Py_ssize_t n, Py_ssize_t k):
    # C(n + k - 1, k - 1)
    cdef Py_ssize_t r = 1, i
    for i in range(1, k):
        r = r * (n + i) // i
    return r


def compositions(Py_ssize_t n, Py_ssize_t k):
    cdef Py_ssize_t m = _n_compositions(n, k)
    out_arr = np.zeros((m, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef cnp.int64_t[::1] c = np.zeros(k, dtype=np.int64)
    cdef Py_ssize_t row, j, rem
    c[0] = n
    for row in range(m):
        for j in range(k):
            out[row, j] = c[j]
        if row == m - 1:
            break
        # next composition: find last j < k-1 with c[j] > 0, move one unit right
        j = k - 2
        while c[j] == 0:
            j -= 1
        c[j] -= 1
        rem = c[k - 1] + 1
        c[k - 1] = 0
        c[j + 1] = rem
    return out_arr


def composition_table(logp, Py_ssize_t n):
    cdef double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef Py_ssize_t k = lp.shape[0]
    counts_arr = compositions(n, k)
    cdef cnp.int64_t[:, ::1] counts = counts_arr
    cdef Py_ssize_t m = counts.shape[0], row, j
    log_mult_arr = np.empty(m, dtype=np.float64)
    log_prob_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] log_mult = log_mult_arr
    cdef double[::1] log_prob = log_prob_arr
    cdef double lg_n = lgamma(n + 1.0), acc, lm
    for row in range(m):
        lm = lg_n
        acc = 0.0
        for j in range(k):
            lm -= lgamma(counts[row, j] + 1.0)
            if counts[row, j] != 0:
                acc += counts[row, j] * lp[j]
        log_mult[row] = lm
        log_prob[row] = acc
    return counts_arr, log_mult_arr, log_prob_arr


def grouped_branch_sums(logp, Py_ssize_t n):
    cdef double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef Py_ssize_t k = lp.shape[0]
    cdef Py_ssize_t n_buckets = (n + 1) ** k
    sums_arr = np.zeros(n_buckets, dtype=np.float64)
    comp_arr = np.zeros(n_buckets, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    cdef double[::1] comp = comp_arr
    cdef Py_ssize_t[::1] digits = np.zeros(n, dtype=np.intp)
    cdef double[::1] prefix = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] weight = (n + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    cdef Py_ssize_t total = k ** n, idx, j, start, code
    cdef double v, s, t
    prefix[0] = lp[0]
    for j in range(1, n):
        prefix[j] = prefix[j - 1] + lp[0]
    code = n * weight[0]
    for idx in range(total):
        v = exp(prefix[n - 1])
        s = sums[code]
        t = s + v
        if fabs(s) >= fabs(v):
            comp[code] += (s - t) + v
        else:
            comp[code] += (v - t) + s
        sums[code] = t
        j = n - 1
        while j >= 0:
            code -= weight[digits[j]]
            digits[j] += 1
            if digits[j] < k:
                code += weight[digits[j]]
                break
            digits[j] = 0
            code += weight[0]
            j -= 1
        if j < 0:
            break
        start = j
        for j in range(start, n):
            if j == 0:
                prefix[0] = lp[digits[0]]
            else:
                prefix[j] = prefix[j - 1] + lp[digits[j]]
    counts_arr = compositions(n, k)
    codes = counts_arr @ np.asarray(weight)
    return counts_arr, (sums_arr + comp_arr)[codes]


def compensated_cumsum(x):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0], i
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double s = 0.0, comp = 0.0, t, v
    for i in range(m):
        v = xs[i]
        t = s + v
        if fabs(s) >= fabs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out_arr
