"""Build script with an optional compiled kernel.

The compiled extension (beamjudge._rerank_core) accelerates the re-ranking
pass and threshold-grid sweeps. It is strictly optional: if Cython or a C
compiler is unavailable the install falls back to the pure-Python kernels
with identical semantics.
"""

import logging

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError

log = logging.getLogger("beamjudge.setup")


class OptionalBuildExt(build_ext):
    """Build the extension if possible; never fail the install over it."""

    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError) as exc:
            log.warning("skipping compiled kernels: %s", exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError) as exc:
            log.warning("skipping compiled kernel %s: %s", ext.name, exc)


def _ext_modules():
    from setuptools import Extension

    try:
        from Cython.Build import cythonize
    except ImportError:
        log.warning("Cython not available; installing pure-Python kernels only")
        return []
    ext = Extension(
        "beamjudge._rerank_core",
        sources=["src/beamjudge/_rerank_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=_ext_modules(),
    cmdclass={"build_ext": OptionalBuildExt},
)
