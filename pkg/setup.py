"""Build hook for the optional compiled pair-sum kernel.

If Cython or a C compiler is unavailable the package still installs and
runs on the pure-Python fallback.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("NLTELEPORT_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "nlteleport._pairsum",
                    ["src/nlteleport/_pairsum.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"nlteleport: skipping compiled kernel ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
