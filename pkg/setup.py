import os

from setuptools import Extension, setup


def ext_modules():
    if os.environ.get("RFPLAN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "rfplan._core",
        ["src/rfplan/_core.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=ext_modules())
