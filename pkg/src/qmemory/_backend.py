"""Kernel backend selection.

The compiled extension is used when importable. ``QMEMORY_BACKEND=python``
forces the fallback; ``QMEMORY_BACKEND=compiled`` makes a missing extension
an import error instead of a silent downgrade.
"""

import os

from . import _fallback

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

_REQUESTED = os.environ.get("QMEMORY_BACKEND", "auto").lower()

if _REQUESTED == "python":
    kernels = _fallback
elif _REQUESTED == "compiled":
    if _kernels is None:
        raise ImportError("QMEMORY_BACKEND=compiled but qmemory._kernels is not built")
    kernels = _kernels
else:
    kernels = _kernels if _kernels is not None else _fallback

BACKEND = "compiled" if kernels is _kernels and _kernels is not None else "python"


def get(name=None):
    """Return the kernel module for ``name`` ('compiled', 'python' or None)."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        if _kernels is None:
            raise ImportError("qmemory._kernels is not built")
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available():
    return ["compiled", "python"] if _kernels is not None else ["python"]
