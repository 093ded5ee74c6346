import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: without Cython or a C compiler the package
# installs pure-Python and falls back to bohmarrival._pykernels at import.
ext_modules = []
if os.environ.get("BOHMARRIVAL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "bohmarrival._ckernels",
                    ["src/bohmarrival/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[
                        ("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"),
                        # inline complex arithmetic instead of C99 __muldc3 calls
                        ("CYTHON_CCOMPLEX", "0"),
                    ],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
