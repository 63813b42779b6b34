"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the package still installs;
pitik._kernels then falls back to the NumPy reference implementation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "pitik._kernels._core",
            sources=["src/pitik/_kernels/_core.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3", "-ffast-math"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except Exception as exc:  # pragma: no cover - build environment dependent
    print("skipping compiled kernels (%s); numpy fallback will be used" % exc)

setup(ext_modules=ext_modules)
