import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rankleak._kernels._ck",
                ["src/rankleak/_kernels/_ck.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Without Cython the package still works on the pure fallback kernel.
    ext_modules = []

setup(ext_modules=ext_modules)
