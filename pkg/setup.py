import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension("mcvx.cone._kernels", ["src/mcvx/cone/_kernels.pyx"],
              include_dirs=[np.get_include()], extra_compile_args=["-O3"]),
]

setup(ext_modules=cythonize(extensions, language_level=3))
