from setuptools import Extension, setup

# The compiled tape kernel is optional: the package falls back to the pure
# Python twin (gradgraph._pykernel) when the extension is absent.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("gradgraph._ckernel", ["src/gradgraph/_ckernel.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
