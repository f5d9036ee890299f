"""Build script for the optional compiled sweep kernels.

The package is fully functional without the extension (a pure-Python
twin of every kernel ships in ``cryophase._kernels_py``), so a failed
compile downgrades to the fallback instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            warnings.warn(f"compiled kernels skipped ({exc}); "
                          "falling back to pure-Python sweeps")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to pure-Python sweeps")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    exts = [
        Extension(
            "cryophase._kernels",
            ["src/cryophase/_kernels.pyx"],
            include_dirs=[np.get_include()],
            # -ffp-contract=off keeps the compiled sweeps bitwise identical
            # to the pure-Python fallback (no FMA contraction).
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]
    return cythonize(exts, compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
