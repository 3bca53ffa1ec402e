"""Build hook for the optional compiled kernels."""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("psinflation._ckernels", ["src/psinflation/_ckernels.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # no Cython or numpy at build time: the numpy fallback is used
    pass

setup(ext_modules=ext_modules)
