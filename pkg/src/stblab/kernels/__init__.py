"""Batched decode kernels with a compiled fast path and a numpy fallback.

The extension module is preferred when importable; set STBLAB_KERNELS to
"numpy" or "fast" to force a backend (forcing "fast" raises if the
extension is missing rather than silently degrading).
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy

_impl = _numpy
_name = "numpy"

_requested = os.environ.get("STBLAB_KERNELS", "").strip().lower()
if _requested not in ("", "numpy", "fast"):
    raise ImportError(f"STBLAB_KERNELS must be 'numpy' or 'fast', not {_requested!r}")
if _requested != "numpy":
    try:
        from . import _fast

        _impl = _fast
        _name = "fast"
    except ImportError:
        if _requested == "fast":
            raise
        _impl = _numpy


def backend_name() -> str:
    return _name


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.complex128)


def ml_argmin(h: np.ndarray, r: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """First argmin_j ||r_i - h_i @ cand_j||^2 per frame i."""
    return _impl.ml_argmin(_c(h), _c(r), _c(cand))


def zf_solve(h: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Per-frame least-squares estimates, pseudo-inverse on degenerate frames."""
    h = _c(h)
    r = _c(r)
    z, ok = _impl.zf_solve(h, r)
    if not ok.all():
        bad = ~ok
        hp = np.linalg.pinv(h[bad])
        z[bad] = np.einsum("blr,br->bl", hp, r[bad])
    return z


def slice_nearest(z: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Per-coordinate nearest-alphabet labels (first index on ties)."""
    return _impl.slice_nearest(_c(z), _c(points))
