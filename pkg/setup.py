"""Build the optional compiled kernel; the package works without it."""
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler / no Cython
            warnings.warn(f"compiled kernel not built, using NumPy fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel not built, using NumPy fallback: {exc}")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("leakycavity._magnus", ["src/leakycavity/_magnus.pyx"],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
