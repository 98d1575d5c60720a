"""Build script for the optional compiled kernel core.

The extension accelerates the two hot sampler loops (edge-wise network
updates and the forward-filter/backward-sample pass). If Cython or a C
compiler is unavailable the install still succeeds and the package falls
back to the pure-NumPy kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            "src/mssar/kernels/_core.pyx",
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    print("Cython not available; installing with pure-Python kernels only.")

setup(ext_modules=ext_modules)
