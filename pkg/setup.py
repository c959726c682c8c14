"""Build the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import), but the compiled core is what makes dataset-scale evaluation and
augmentation fast. Rebuild in place with:

    python setup.py build_ext --inplace
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "detbench._ckernels",
        ["src/detbench/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off: the fallback and the extension must agree
        # bit-for-bit, so FMA contraction is disabled.
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
