"""Build script for the optional compiled kernels.

If Cython or a C++ compiler is missing the package still installs and runs on
the pure-Python kernels.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("DATAMARKET_NO_EXT", "0") in ("", "0"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "datamarket.kernels._ckernels",
                    ["src/datamarket/kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    language="c++",
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
