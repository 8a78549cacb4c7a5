from setuptools import Extension, setup

import numpy as np
from Cython.Build import cythonize

ext_modules = cythonize(
    [
        Extension(
            "teleopspace.kernels._compiled",
            ["src/teleopspace/kernels/_compiled.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # per-operation IEEE rounding must match the pure-Python reference
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
    ],
    language_level=3,
)

setup(ext_modules=ext_modules)
