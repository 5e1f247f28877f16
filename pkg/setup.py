"""Build script for the compiled state-space kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), but the compiled kernels make large explorations much
faster.  Build in place with ``python setup.py build_ext --inplace`` or just
``pip install -e . --no-build-isolation``.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build environments without Cython
    cythonize = None

extensions = [
    Extension(
        "mldes.engine._kernels",
        ["src/mldes/engine/_kernels.pyx"],
        language="c++",
        extra_compile_args=["-O2"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
