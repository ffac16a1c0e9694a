"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: ``rbfanneal._backend``
falls back to a pure-Python implementation of the same kernels when the
compiled module is absent.  Any build failure here is therefore demoted to a
warning instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            warnings.warn(f"compiled kernels skipped: {exc}", RuntimeWarning)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(
                f"building {ext.name} failed ({exc}); "
                "the pure-Python kernels will be used",
                RuntimeWarning,
            )


def make_extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "rbfanneal._fastkernels",
        ["src/rbfanneal/_fastkernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=make_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
