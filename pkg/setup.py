from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(["src/spillnash/_oracle_kernel.pyx"], language_level=3, quiet=True)
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
