"""Kernel backend selection.

The compiled Cython kernel is preferred when it was built; otherwise the
NumPy fallback is used.  Override with the environment variable
``CPD3_KERNEL`` set to ``cython`` (fail if unavailable) or ``python``.
"""

import os

from . import pyops

_requested = os.environ.get("CPD3_KERNEL", "auto").lower()

if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"CPD3_KERNEL must be auto/cython/python, got {_requested!r}")

if _requested == "python":
    _impl = pyops
    BACKEND = "python"
else:
    try:
        from . import _cyops as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = pyops
        BACKEND = "python"

row_block = _impl.row_block


def available_backends():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        from . import _cyops  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Fetch a specific backend module by name (for benchmarks/tests)."""
    if name == "python":
        return pyops
    if name == "cython":
        from . import _cyops

        return _cyops
    raise ValueError(f"unknown kernel backend {name!r}")
