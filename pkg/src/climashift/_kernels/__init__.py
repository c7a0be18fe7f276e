"""Backend selection for the hot kernels.

The compiled Cython extension is preferred when it imported cleanly;
otherwise the pure-numpy fallback is used. Set ``CLIMASHIFT_NO_EXT=1``
before import to force the fallback. Callers go through this module's
attributes (``kernels.pcg32_fill(...)``) so benchmarks and tests can
swap backends in-process.
"""

from __future__ import annotations

import os

from . import _fallback

_impl = _fallback
if os.environ.get("CLIMASHIFT_NO_EXT", "") in ("", "0"):
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND_NAME

pcg32_fill = _impl.pcg32_fill
ar1_filter = _impl.ar1_filter
fnv1a64 = _impl.fnv1a64
weighted_sqerr = _impl.weighted_sqerr
