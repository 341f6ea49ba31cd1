# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled compute kernels.

Accumulation contract shared with the numpy fallback: row sums run in edge
storage order with the bias added last; max reductions keep the earliest
maximal tap and normalize -0.0 away by adding +0.0.
"""

from libc.math cimport fabs, INFINITY

import numpy as np


def net_sum(const long long[::1] indptr, const long long[::1] src,
            const double[::1] w, const double[::1] bias, const double[::1] x):
    cdef Py_ssize_t width = bias.shape[0]
    out_arr = np.empty(width, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, e
    cdef double acc
    for j in range(width):
        acc = 0.0
        for e in range(indptr[j], indptr[j + 1]):
            acc += w[e] * x[src[e]]
        out[j] = acc + bias[j]
    return out_arr


def net_max(const long long[::1] indptr, const long long[::1] src,
            const double[::1] w, const double[::1] x):
    cdef Py_ssize_t width = indptr.shape[0] - 1
    out_arr = np.empty(width, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, e
    cdef double m, v
    for j in range(width):
        m = -INFINITY
        for e in range(indptr[j], indptr[j + 1]):
            v = w[e] * x[src[e]]
            if v > m:
                m = v
        out[j] = m + 0.0
    return out_arr


def bounds_sum(const long long[::1] indptr, const long long[::1] src,
               const double[::1] w, const double[::1] bias,
               const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t width = bias.shape[0]
    lo_arr = np.empty(width, dtype=np.float64)
    hi_arr = np.empty(width, dtype=np.float64)
    cdef double[::1] olo = lo_arr
    cdef double[::1] ohi = hi_arr
    cdef Py_ssize_t j, e, s
    cdef double al, ah, we
    for j in range(width):
        al = 0.0
        ah = 0.0
        for e in range(indptr[j], indptr[j + 1]):
            s = src[e]
            we = w[e]
            if we >= 0:
                al += we * lo[s]
                ah += we * hi[s]
            else:
                al += we * hi[s]
                ah += we * lo[s]
        olo[j] = al + bias[j]
        ohi[j] = ah + bias[j]
    return lo_arr, hi_arr


def bounds_max(const long long[::1] indptr, const long long[::1] src,
               const double[::1] w,
               const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t width = indptr.shape[0] - 1
    lo_arr = np.empty(width, dtype=np.float64)
    hi_arr = np.empty(width, dtype=np.float64)
    cdef double[::1] olo = lo_arr
    cdef double[::1] ohi = hi_arr
    cdef Py_ssize_t j, e, s
    cdef double ml, mh, vl, vh, we
    for j in range(width):
        ml = -INFINITY
        mh = -INFINITY
        for e in range(indptr[j], indptr[j + 1]):
            s = src[e]
            we = w[e]
            if we >= 0:
                vl = we * lo[s]
                vh = we * hi[s]
            else:
                vl = we * hi[s]
                vh = we * lo[s]
            if vl > ml:
                ml = vl
            if vh > mh:
                mh = vh
        olo[j] = ml + 0.0
        ohi[j] = mh + 0.0
    return lo_arr, hi_arr


def seg_absmax(const long long[::1] indptr, const double[::1] vals):
    cdef Py_ssize_t width = indptr.shape[0] - 1
    out_arr = np.zeros(width, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, e
    cdef double m, v
    for j in range(width):
        m = 0.0
        for e in range(indptr[j], indptr[j + 1]):
            v = fabs(vals[e])
            if v > m:
                m = v
        out[j] = m
    return out_arr


def seg_argmax(const long long[::1] indptr, const double[::1] vals):
    cdef Py_ssize_t width = indptr.shape[0] - 1
    out_arr = np.full(width, -1, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t j, e
    cdef double m
    cdef long long mi
    for j in range(width):
        m = -INFINITY
        mi = -1
        for e in range(indptr[j], indptr[j + 1]):
            if vals[e] > m:
                m = vals[e]
                mi = e
        out[j] = mi
    return out_arr
