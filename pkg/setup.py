import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "epflow._sepkernel",
                ["src/epflow/_sepkernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # The package works without the compiled kernel; a NumPy fallback is
    # selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
