"""Build hook: compiles the optional Cython kernel extension.

The package works without the extension (a pure Python fallback with the
same API is selected at import time), so any compilation failure downgrades
to a plain install instead of aborting it.
"""

import sys

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "handleforge._kernels",
                ["src/handleforge/_kernels.pyx"],
                language="c++",
                extra_compile_args=["-O2", "-std=c++17"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # no cython / no compiler: install pure-python only
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)
    ext_modules = []

setup(ext_modules=ext_modules)
