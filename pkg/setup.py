"""Build script: compiles the optional C extension holding the share-computation kernels.

The package works without the extension (a pure-Python twin is selected at import
time), so a missing Cython or C compiler only costs speed, not functionality.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "mmsvote._kernels",
        ["src/mmsvote/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
    if cythonize is not None
    else [],
)
