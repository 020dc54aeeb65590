"""Build script: compiles the optional fading-draw kernel.

The package is fully functional without the extension -- the kernel loader in
``irsplan._kernels`` falls back to a numpy implementation at import time -- so
any failure to build the extension (no Cython, no compiler) degrades silently
to the pure-Python install.  Set IRSPLAN_NO_EXTENSION=1 to skip the extension
on purpose.
"""

import os

from setuptools import setup


def _extensions():
    if os.environ.get("IRSPLAN_NO_EXTENSION"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "irsplan._kernels._fading",
        sources=["src/irsplan/_kernels/_fading.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[os.path.join(os.path.dirname(np.random.__file__), "lib")],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
