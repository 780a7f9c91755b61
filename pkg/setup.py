import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: if Cython or a C toolchain is missing the
# package falls back to the pure-numpy implementation selected in
# wbctl/kernels.py.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wbctl._speedups",
                ["src/wbctl/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
