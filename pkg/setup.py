import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-python
# backend when the extension is absent (see fpe._backend).
ext_modules = []
try:
    from Cython.Build import cythonize

    openmp_flags = [] if os.environ.get("FPE_NO_OPENMP") else ["-fopenmp"]
    ext = Extension(
        "fpe._kernels",
        sources=["src/fpe/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"] + openmp_flags,
        extra_link_args=openmp_flags,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
