"""Build the optional Cython time-marching kernels.

If Cython or a C compiler is unavailable the package still installs and the
numpy fallback in ``rda_optctl._pykernels`` is used at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("RDA_OPTCTL_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        extensions = [
            Extension(
                "rda_optctl._ckernels",
                ["src/rda_optctl/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # keep the arithmetic identical to the numpy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
