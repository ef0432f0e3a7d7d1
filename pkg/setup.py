"""Build script: compiles the optional multiplicative-update kernel.

The package works without the extension (a NumPy fallback is selected at
import time); set POSTURESYN_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("POSTURESYN_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/posturesyn/_mu_cy.pyx"],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
