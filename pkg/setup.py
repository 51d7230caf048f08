import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# no -ffast-math: the compiled kernels must reproduce the Python fallback bit
# for bit on the census
extensions = [
    Extension(
        "tangency_horseshoe._core",
        ["src/tangency_horseshoe/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
