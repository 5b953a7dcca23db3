"""Builds the optional Cython extension for the SMO hot loop.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time); building it just makes one-class SVM training
faster. If no compiler is available the build degrades gracefully.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "focuswatch._fastsmo",
                ["src/focuswatch/_fastsmo.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
