import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "stomech.sde._kernels",
                ["src/stomech/sde/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no fast-math: kernels must be bit-identical with the numpy fallback
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-python install still works; stomech.sde.kernels falls back to numpy
    ext_modules = []

setup(ext_modules=ext_modules)
