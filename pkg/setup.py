"""Build script: compiles the optional sampling-kernel extension.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile degrades to the slow backend instead of
breaking the install.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        print("dbnf0: Cython/numpy unavailable at build time; "
              "skipping compiled sampling kernels", file=sys.stderr)
        return []
    ext = Extension(
        "dbnf0._sampling_ext",
        ["src/dbnf0/_sampling_ext.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    setup(ext_modules=_extensions())
except SystemExit:
    raise
except Exception as exc:  # compiler missing or broken
    print(f"dbnf0: extension build failed ({exc}); "
          "installing pure-Python backend only", file=sys.stderr)
    setup(ext_modules=[])
