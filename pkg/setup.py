"""Builds the optional compiled kernel extension.

The package works without it (a pure-numpy fallback is selected at import
time), so any failure here downgrades to a warning instead of aborting the
install. Set CLIMASHIFT_NO_EXT=1 to skip the compile step entirely.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("CLIMASHIFT_NO_EXT", "") not in ("", "0"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"climashift: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "climashift._kernels._speedups",
        ["src/climashift/_kernels/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # fp-contract off: the AR(1) filter must match the numpy fallback
        # bit for bit, so FMA fusion is not allowed.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level="3")


class OptionalBuildExt(build_ext):
    """build_ext that tolerates a missing or broken C toolchain."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            print(f"climashift: compiled kernels unavailable ({exc}); "
                  "falling back to pure numpy", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"climashift: failed to build {ext.name} ({exc}); "
                  "falling back to pure numpy", file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
