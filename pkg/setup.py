"""Build script: compiles the optional solver hot-loop extension.

The package works without the extension (a pure-Python twin of the kernel
is selected at import time), so a failed cythonization or compile is
tolerated and only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mimo_ee._core",
                ["src/mimo_ee/_core.pyx"],
                # -ffp-contract=off keeps per-operation IEEE semantics so the
                # compiled kernel stays bit-compatible with the Python twin.
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled solver core ({exc})")

setup(ext_modules=ext_modules)
