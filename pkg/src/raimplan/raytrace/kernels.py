"""Kernel backend selection: compiled extension if available, else pure Python.

Set RAIMPLAN_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-equivalence tests, which import both modules explicitly).
"""

from __future__ import annotations

import os

if os.environ.get("RAIMPLAN_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl

    _BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        _BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        _BACKEND = "python"

segment_blocked = _impl.segment_blocked
trace_paths = _impl.trace_paths


def active_backend() -> str:
    """Name of the geometry backend in use: 'compiled' or 'python'."""
    return _BACKEND
