"""Builds the optional Cython kernels; the package still works without them."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FOCKSPEC_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "fockspec._ckernels",
                    ["src/fockspec/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
