"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback with identical
output is selected at import), so any compilation failure downgrades to a
pure-Python install instead of aborting.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: building the compiled kernels failed ({exc}); "
                  "falling back to the pure-Python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} failed to compile ({exc}); "
                  "falling back to the pure-Python backend")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; skipping compiled kernels")
        return []
    return cythonize(
        [Extension("evlg._kernels_cy", ["src/evlg/_kernels_cy.pyx"])],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
