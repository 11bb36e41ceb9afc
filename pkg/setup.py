"""Build script for the optional compiled kernels.

The package is fully functional without a C toolchain: if Cython or the
compiler is unavailable the extension is skipped and the pure-numpy
fallback kernels are used at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise install pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            print(f"warning: skipping compiled kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"warning: compiled kernels disabled ({exc})")
        return []
    ext = Extension(
        "macroplace.kernels._ckernels",
        ["src/macroplace/kernels/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
