import os
import platform

import numpy as np
from setuptools import Extension, setup

POPCNT = ["-mpopcnt"] if platform.machine() in ("x86_64", "AMD64") else []

extensions = []
if os.environ.get("APUFLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = cythonize(
            [
                Extension(
                    "apuflab._kernels",
                    ["src/apuflab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # keep float results identical to the numpy fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"] + POPCNT,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=extensions)
