from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; unigen falls back to _kernel_py
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "unigen._kernel",
                ["src/unigen/_kernel.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
