"""Solver kernel selection: compiled extension when available, pure Python
otherwise.  Set MIMO_EE_BACKEND=python|compiled to force a choice."""

from __future__ import annotations

import os

from . import _core_py

try:
    from . import _core as _compiled
except ImportError:  # pragma: no cover - build-environment dependent
    _compiled = None


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if _compiled is not None else ("python",)


def get_backend(name: str | None = None):
    """Return the kernel module for `name` (or the environment/auto choice)."""
    if name is None:
        name = os.environ.get("MIMO_EE_BACKEND", "auto").lower()
    if name in ("auto", ""):
        return _compiled if _compiled is not None else _core_py
    if name == "python":
        return _core_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled solver core is not available; "
                              "reinstall with a C compiler or use the python backend")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def backend_name(module=None) -> str:
    module = module if module is not None else get_backend()
    return "python" if module is _core_py else "compiled"
