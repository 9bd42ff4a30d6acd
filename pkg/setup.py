import os

from setuptools import Extension, setup

# The compiled sliding-window kernel is optional: the package falls back to
# the pure-Python implementation when the extension is absent. Set
# SIDESLIP_NO_EXT=1 to skip building it (e.g. on hosts without a C compiler).
#
# Floating-point contraction is disabled so the kernel's arithmetic matches
# the Python path operation for operation.
ext_modules = []
if not os.environ.get("SIDESLIP_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "sideslip._fixedlag",
                    ["src/sideslip/_fixedlag.pyx"],
                    extra_compile_args=["-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
