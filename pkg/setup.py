"""Build script: compiles the Cython simulation core.

The compiled extension is optional.  If no C compiler is available the
install still succeeds and the package falls back to the pure-numpy
kernels in ``cutoffsim.backends.pyref`` (selected at import time).
"""

import sys

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


extensions = [
    Extension(
        "cutoffsim.backends._native",
        ["src/cutoffsim/backends/_native.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]


class optional_build_ext(build_ext):
    """Degrade to a pure-Python install when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken
            print(f"WARNING: building the native core failed ({exc}); "
                  "cutoffsim will use the pure-Python kernels", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: {ext.name} failed to compile ({exc}); "
                  "falling back to pure-Python kernels", file=sys.stderr)


try:
    from Cython.Build import cythonize
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
