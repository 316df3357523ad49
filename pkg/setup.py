"""Build script. The compiled stepper kernel is optional: when Cython (and a C
compiler) are available the extension hlsinterp._fsmcore is built, otherwise the
package installs pure-Python and selects the fallback stepper at import time.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


def extensions():
    if os.environ.get("HLSINTERP_PURE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        ["src/hlsinterp/_fsmcore.pyx"],
        compiler_directives={"language_level": "3"},
    )


class optional_build_ext(build_ext):
    """Build the extension if possible; fall back to pure Python on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: compiled kernel skipped ({exc}); using pure-Python stepper")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} skipped ({exc}); using pure-Python stepper")


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
