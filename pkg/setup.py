"""Build the optional compiled kernel.

When Cython or a C compiler is unavailable the package still installs and
falls back to the pure-Python kernel at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("porveq._kernel_c", ["src/porveq/_kernel_c.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
