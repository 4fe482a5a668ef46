"""Builds the optional compiled kernel; the package works without it."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("LEPTONSTORE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            ["src/leptonstore/kernels/_core.pyx"],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
