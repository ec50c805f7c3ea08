import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LIFTREACH_SKIP_EXTENSION"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "liftreach._kernels._evalcore",
                    ["src/liftreach/_kernels/_evalcore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # Pure-Python install; the numpy fallback backend is used at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
