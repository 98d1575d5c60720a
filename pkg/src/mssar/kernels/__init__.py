"""Hot sampler kernels with a compiled core and a pure-NumPy fallback.

The compiled extension (built from ``_core.pyx``) is used when available;
otherwise the package runs on the NumPy twins in :mod:`mssar.kernels.pure`.
Set ``MSSAR_BACKEND=python`` or ``MSSAR_BACKEND=compiled`` to force a
backend; forcing ``compiled`` raises if the extension is missing.
"""

import os

from . import pure
from .pure import REFRESH_EVERY, build_filter_state, draw_index, flip_stats

_requested = os.environ.get("MSSAR_BACKEND", "").strip().lower()
if _requested not in ("", "compiled", "python"):
    raise ImportError(f"MSSAR_BACKEND must be 'compiled' or 'python', got {_requested!r}")

if _requested == "python":
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = pure
        BACKEND = "python"

ffbs = _impl.ffbs
omega_sweep = _impl.omega_sweep

__all__ = [
    "BACKEND",
    "REFRESH_EVERY",
    "build_filter_state",
    "draw_index",
    "ffbs",
    "flip_stats",
    "omega_sweep",
    "pure",
]
