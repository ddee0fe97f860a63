"""Build script: compiles the transportation-simplex extension when a C
toolchain is available, otherwise installs with the pure-Python fallback."""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Tolerate a missing compiler; rbir._backend falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure
            sys.stderr.write(f"warning: C extension build failed ({exc}); "
                             "rbir will use the pure-Python transport kernel\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            sys.stderr.write(f"warning: building {ext.name} failed ({exc}); "
                             "falling back to pure Python\n")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "rbir._transport",
        sources=["src/rbir/_transport.pyx"],
        # no -ffast-math: the pure and compiled kernels must agree bit-for-bit
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
