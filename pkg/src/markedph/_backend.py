"""Kernel backend selection.

The compiled extension is used when it imports; setting
``MARKEDPH_BACKEND=python`` forces the pure-Python fallback.
"""
import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if os.environ.get("MARKEDPH_BACKEND", "").lower() == "python" or _compiled is None:
    kernels: ModuleType = _kernels_py
    BACKEND = "python"
else:
    kernels = _compiled
    BACKEND = "cython"


def available_backends() -> dict[str, ModuleType]:
    """Every importable kernel implementation, keyed by name."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
