import warnings

import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/salbench/_transport/_solver_cy.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.extra_compile_args.append("-O3")
except ImportError:
    warnings.warn(
        "Cython is not available; installing with the pure-Python "
        "transportation solver only."
    )
    ext_modules = []

setup(ext_modules=ext_modules)
