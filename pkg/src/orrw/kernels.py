"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when
``ORRW_PURE_PYTHON=1`` is set, the pure-Python reference is used.  Both
produce identical output for identical inputs and seeds.
"""

from __future__ import annotations

import os

from . import _kernels_py

_compiled = None
if os.environ.get("ORRW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py

BACKEND: str = _impl.BACKEND
orrw_run = _impl.orrw_run
network_walks = _impl.network_walks


def compiled_available() -> bool:
    return _compiled is not None


def backend_module(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
