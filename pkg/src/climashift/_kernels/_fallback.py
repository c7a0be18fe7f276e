"""Pure-numpy implementations of the hot kernels.

Compatibility contract with the compiled backend (`_speedups`):

* ``pcg32_fill`` and ``ar1_filter`` are bit-identical (integer arithmetic
  and elementwise float arithmetic in the same operation order).
* ``fnv1a64`` is exact (integer algorithm).
* ``weighted_sqerr`` may differ in the final ulps because the summation
  order differs; callers must treat it as accurate to ~1e-15 relative.

The PCG32 state recurrence ``s' = A*s + c (mod 2**64)`` is affine, so a
block of successive states is ``A**k * s + S_k * c`` with
``S_k = 1 + A + ... + A**(k-1)``. The ``A**k`` and ``S_k`` tables are
precomputed once, which lets numpy produce the exact sequential stream
without a per-draw Python loop.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "fallback"

_MASK64 = (1 << 64) - 1
_PCG_MULT = 6364136223846793005
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_BLOCK = 4096
_POW_TABLE = None  # uint64[_BLOCK + 1], A**k mod 2**64
_SUM_TABLE = None  # uint64[_BLOCK + 1], (1 + A + ... + A**(k-1)) mod 2**64


def _pcg_tables():
    global _POW_TABLE, _SUM_TABLE
    if _POW_TABLE is None:
        pow_t = np.empty(_BLOCK + 1, dtype=np.uint64)
        sum_t = np.empty(_BLOCK + 1, dtype=np.uint64)
        a, s = 1, 0
        for k in range(_BLOCK + 1):
            pow_t[k] = a
            sum_t[k] = s
            s = (s + a) & _MASK64
            a = (a * _PCG_MULT) & _MASK64
        _POW_TABLE, _SUM_TABLE = pow_t, sum_t
    return _POW_TABLE, _SUM_TABLE


def pcg32_fill(n, state, inc):
    """Draw ``n`` PCG32 (XSH-RR 64/32) outputs.

    Returns ``(uint32 array, new_state)``; ``inc`` must be odd.
    """
    out = np.empty(n, dtype=np.uint32)
    pow_t, sum_t = _pcg_tables()
    jump_a = int(pow_t[_BLOCK])
    jump_s = int(sum_t[_BLOCK])
    s = int(state) & _MASK64
    inc = int(inc) & _MASK64
    pos = 0
    while pos < n:
        m = min(_BLOCK, n - pos)
        olds = pow_t[:m] * np.uint64(s) + sum_t[:m] * np.uint64(inc)
        xorshifted = (((olds >> np.uint64(18)) ^ olds) >> np.uint64(27)).astype(np.uint32)
        rot = (olds >> np.uint64(59)).astype(np.uint32)
        out[pos:pos + m] = (xorshifted >> rot) | (
            xorshifted << ((np.uint32(32) - rot) & np.uint32(31)))
        if m == _BLOCK:
            s = (jump_a * s + jump_s * inc) & _MASK64
        else:
            s = (int(pow_t[m]) * s + int(sum_t[m]) * inc) & _MASK64
        pos += m
    return out, s


def ar1_filter(x, rho):
    """Apply ``y[0] = x[0]; y[t] = rho*y[t-1] + x[t]`` along axis 0."""
    y = np.array(x, dtype=np.float64)
    for t in range(1, y.shape[0]):
        y[t] += rho * y[t - 1]
    return y


def fnv1a64(data, h=_FNV_OFFSET):
    """FNV-1a 64-bit hash of ``data`` continuing from state ``h``."""
    for b in bytes(data):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def weighted_sqerr(pred, truth, w):
    """Per-forecast latitude-weighted mean squared error.

    ``pred`` and ``truth`` are ``[F, n_lat, n_lon]``; returns ``float64[F]``
    holding ``(1/(n_lat*n_lon)) * sum_ij w[i] * (pred - truth)**2``.
    """
    d = pred - truth
    n_lat, n_lon = pred.shape[1], pred.shape[2]
    return np.einsum("fij,i->f", d * d, w) / (n_lat * n_lon)
