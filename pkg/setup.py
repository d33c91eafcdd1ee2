import warnings

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "urllcsim._kernels._core",
                ["src/urllcsim/_kernels/_core.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn(
        "Cython is not available; installing without the compiled kernel "
        "core. The pure-Python kernels will be selected at import time "
        "(correct, but much slower for large Monte Carlo runs)."
    )
    ext_modules = []

setup(ext_modules=ext_modules)
