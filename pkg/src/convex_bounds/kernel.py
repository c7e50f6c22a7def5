"""Backend selection for the hot kernels.

The compiled extension ``_ckernel`` is used when it was built; otherwise the
numpy implementation in ``_pykernel``.  Setting ``CONVEX_BOUNDS_PURE=1``
forces the fallback.
"""

from __future__ import annotations

import os

from convex_bounds import _pykernel

if os.environ.get("CONVEX_BOUNDS_PURE", "") not in ("", "0"):
    _impl = _pykernel
else:
    try:
        from convex_bounds import _ckernel as _impl
    except ImportError:  # extension not built
        _impl = _pykernel

BACKEND = "cython" if _impl is not _pykernel else "python"
# per-point interpretation loses to numpy's vectorised ops on large batches
BATCH_SWITCH = 512

eval_point = _impl.eval_point
simpson = _impl.simpson


def eval_points(program, xs):
    if _impl is _pykernel or getattr(xs, "size", len(xs)) >= BATCH_SWITCH:
        return _pykernel.eval_points(program, xs)
    return _impl.eval_points(program, xs)


def backends() -> dict:
    """All importable backends by name (the fallback is always present)."""
    found = {"python": _pykernel}
    try:
        from convex_bounds import _ckernel

        found["cython"] = _ckernel
    except ImportError:
        pass
    return found
