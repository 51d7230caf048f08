"""Backend selection for the hot loops.

The compiled ``_core`` extension is used when it imports; otherwise, or when
``TANGENCY_PURE_PYTHON=1`` is set, the pure-Python ``_core_py`` fallback is
used.  Both expose the same functions.
"""
import os

from . import _core_py

if os.environ.get("TANGENCY_PURE_PYTHON", "") not in ("", "0"):
    core = _core_py
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = _core_py

BACKEND = "compiled" if core is not _core_py else "python"

__all__ = ["core", "BACKEND"]
