"""Builds the optional Cython kernels; the package works without them."""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("orrw._kernels", ["src/orrw/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": 3},
    )
except ImportError as exc:
    print(f"building without compiled kernels: {exc}", file=sys.stderr)

setup(ext_modules=ext_modules)
