"""RK4 kernel backends.

The compiled extension is used when it imports; otherwise the pure-Python
fallback.  Set ``HETMIX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

pure = _pykernel

compiled = None
if os.environ.get("HETMIX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernel as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"


def available():
    """Mapping of backend name to module for every importable backend."""
    out = {"python": pure}
    if compiled is not None:
        out["cython"] = compiled
    return out
