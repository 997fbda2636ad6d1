"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``COARRAY_DOA_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from ._zstep_py import admm_zstep as _py_kernel

try:
    if os.environ.get("COARRAY_DOA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced")
    from ._zstep_ext import admm_zstep as _ext_kernel
except ImportError:
    _ext_kernel = None

BACKEND = "compiled" if _ext_kernel is not None else "python"


def available() -> list[str]:
    return ["compiled", "python"] if _ext_kernel is not None else ["python"]


def get_kernel(name: str | None = None):
    if name is None:
        name = BACKEND
    if name == "python":
        return _py_kernel
    if name == "compiled":
        if _ext_kernel is None:
            raise RuntimeError("compiled kernel not built; run `pip install -e .`")
        return _ext_kernel
    raise ValueError(f"unknown backend {name!r}")
