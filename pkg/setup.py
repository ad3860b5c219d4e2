import os

import numpy as np
from setuptools import Extension, setup

# Set MITEST_NO_EXT=1 to skip the compiled kernels; the package then runs on
# the pure-Python fallback.
ext_modules = []
if not os.environ.get("MITEST_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "mitest._kernels",
                    ["src/mitest/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
