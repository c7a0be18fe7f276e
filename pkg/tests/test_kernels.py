"""Backend interchangeability: compiled kernels vs the numpy fallback.

pcg32_fill / ar1_filter must be bit-identical, fnv1a64 exact, and
weighted_sqerr equal up to summation-order ulps. When the compiled
extension is absent the comparisons self-skip.
"""

import numpy as np
import pytest

from climashift._kernels import _fallback

_speedups = pytest.importorskip(
    "climashift._kernels._speedups",
    reason="compiled kernels not built; fallback-only install")

BACKENDS = (_fallback, _speedups)


def test_backend_names():
    assert _fallback.BACKEND_NAME == "fallback"
    assert _speedups.BACKEND_NAME == "compiled"


def test_pcg32_fill_bit_identical():
    state, inc = 0x853C49E6748FEA9B, (0xDA3E39CB94B95BDB << 1) | 1
    for n in (0, 1, 7, 4096, 4097, 20000):
        a, sa = _fallback.pcg32_fill(n, state, inc)
        b, sb = _speedups.pcg32_fill(n, state, inc)
        assert sa == sb
        assert a.dtype == np.uint32 and b.dtype == np.uint32
        assert (a == b).all()


def test_ar1_filter_bit_identical():
    rng = np.random.default_rng(7)
    for shape in ((1, 3), (500, 64), (13, 1)):
        x = rng.standard_normal(shape)
        for rho in (0.0, 0.35, 0.99):
            ya = _fallback.ar1_filter(x, rho)
            yb = _speedups.ar1_filter(x, rho)
            assert (ya == yb).all()


def test_ar1_filter_does_not_mutate_input():
    x = np.ones((4, 2))
    keep = x.copy()
    for impl in BACKENDS:
        impl.ar1_filter(x, 0.5)
        assert (x == keep).all()


def test_fnv1a64_exact_and_chained():
    rng = np.random.default_rng(0)
    blobs = [b"", b"\x00", b"foobar",
             bytes(rng.integers(0, 256, 100_000, dtype=np.uint8))]
    for blob in blobs:
        assert _fallback.fnv1a64(blob) == _speedups.fnv1a64(blob)
    for impl in BACKENDS:
        whole = impl.fnv1a64(b"foobar")
        split = impl.fnv1a64(b"bar", impl.fnv1a64(b"foo"))
        assert whole == split


def test_weighted_sqerr_close():
    rng = np.random.default_rng(3)
    pred = rng.standard_normal((40, 12, 8))
    truth = rng.standard_normal((40, 12, 8))
    w = np.abs(rng.standard_normal(12)) + 0.5
    a = _fallback.weighted_sqerr(pred, truth, w)
    b = _speedups.weighted_sqerr(pred, truth, w)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-12


def test_weighted_sqerr_accepts_readonly_inputs():
    pred = np.ones((2, 3, 4))
    truth = np.zeros((2, 3, 4))
    w = np.ones(3)
    for arr in (pred, truth, w):
        arr.setflags(write=False)
    for impl in BACKENDS:
        out = impl.weighted_sqerr(pred, truth, w)
        assert np.allclose(out, 1.0)
