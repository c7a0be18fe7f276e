# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Must stay interchangeable with ``_fallback``: ``pcg32_fill`` and
``ar1_filter`` bit-identical (the build disables FMA contraction so the
multiply-add in the AR(1) recurrence rounds exactly like numpy's two
separate operations), ``fnv1a64`` exact, ``weighted_sqerr`` equal up to
summation-order ulps.
"""

import numpy as np

from libc.stdint cimport uint32_t, uint64_t

BACKEND_NAME = "compiled"

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325

cdef uint64_t PCG_MULT = 6364136223846793005u
cdef uint64_t FNV_PRIME = 0x100000001B3u


def pcg32_fill(n, state, inc):
    """Draw ``n`` PCG32 (XSH-RR 64/32) outputs.

    Returns ``(uint32 array, new_state)``; ``inc`` must be odd.
    """
    cdef Py_ssize_t num = n, k
    out_arr = np.empty(num, dtype=np.uint32)
    cdef uint32_t[::1] out = out_arr
    cdef uint64_t s = int(state) & _MASK64
    cdef uint64_t c = int(inc) & _MASK64
    cdef uint64_t olds
    cdef uint32_t xorshifted, rot
    with nogil:
        for k in range(num):
            olds = s
            s = olds * PCG_MULT + c
            xorshifted = <uint32_t>(((olds >> 18) ^ olds) >> 27)
            rot = <uint32_t>(olds >> 59)
            out[k] = (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))
    return out_arr, int(s)


def ar1_filter(x, rho):
    """Apply ``y[0] = x[0]; y[t] = rho*y[t-1] + x[t]`` along axis 0."""
    arr = np.array(x, dtype=np.float64, order="C")
    if arr.ndim == 0:
        raise ValueError("ar1_filter needs at least one axis")
    flat = arr.reshape(arr.shape[0], -1)
    cdef double[:, ::1] y = flat
    cdef double r = rho
    cdef Py_ssize_t t, m, n_t = y.shape[0], n_m = y.shape[1]
    with nogil:
        for t in range(1, n_t):
            for m in range(n_m):
                y[t, m] = y[t, m] + r * y[t - 1, m]
    return arr


def fnv1a64(data, h=_FNV_OFFSET):
    """FNV-1a 64-bit hash of ``data`` continuing from state ``h``."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        data = bytes(data)
    cdef uint64_t state = int(h) & _MASK64
    if len(data) == 0:
        return int(state)
    cdef const unsigned char[::1] buf = data
    cdef Py_ssize_t i, n = buf.shape[0]
    with nogil:
        for i in range(n):
            state = (state ^ <uint64_t>buf[i]) * FNV_PRIME
    return int(state)


def weighted_sqerr(pred, truth, w):
    """Per-forecast latitude-weighted mean squared error.

    ``pred`` and ``truth`` are ``[F, n_lat, n_lon]``; returns ``float64[F]``
    holding ``(1/(n_lat*n_lon)) * sum_ij w[i] * (pred - truth)**2``.
    """
    pred_arr = np.ascontiguousarray(pred, dtype=np.float64)
    truth_arr = np.ascontiguousarray(truth, dtype=np.float64)
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    if pred_arr.ndim != 3 or pred_arr.shape != truth_arr.shape:
        raise ValueError("pred and truth must both be [F, n_lat, n_lon]")
    if w_arr.ndim != 1 or w_arr.shape[0] != pred_arr.shape[1]:
        raise ValueError("w must have one weight per latitude row")
    cdef const double[:, :, ::1] p = pred_arr
    cdef const double[:, :, ::1] t = truth_arr
    cdef const double[::1] wv = w_arr
    cdef Py_ssize_t f, i, j
    cdef Py_ssize_t n_f = p.shape[0], n_lat = p.shape[1], n_lon = p.shape[2]
    out_arr = np.empty(n_f, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, row, d
    with nogil:
        for f in range(n_f):
            acc = 0.0
            for i in range(n_lat):
                row = 0.0
                for j in range(n_lon):
                    d = p[f, i, j] - t[f, i, j]
                    row = row + d * d
                acc = acc + wv[i] * row
            out[f] = acc / (n_lat * n_lon)
    return out_arr
