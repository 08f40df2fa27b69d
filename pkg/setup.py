import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "ellipdim._kernels._speedups",
                ["src/ellipdim/_kernels/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-Python install still works; the package falls back to the
    # vectorized numpy kernels at import time
    extensions = []

setup(ext_modules=extensions)
