"""Build script: compiles the fast-marching kernel when Cython and a C
compiler are available, otherwise installs with the pure-Python kernel only.
"""
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fluxlines._fmm_cy",
                ["src/fluxlines/_fmm_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError as exc:  # pragma: no cover - degraded install path
    print(f"fluxlines: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
