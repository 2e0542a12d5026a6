import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DDLSFF_NO_EXT") != "1":
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "ddlsff._ckernels",
            ["src/ddlsff/_ckernels.pyx"],
            include_dirs=[np.get_include()],
            # no contraction into FMA: results must match the numpy fallback bit for bit
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
