"""Kernel selection: compiled fast-marching core with pure-Python fallback.

Set ``FLUXLINES_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the kernel-parity tests).
"""
from __future__ import annotations

import os

from . import _fmm_py

_force_py = os.environ.get("FLUXLINES_PURE_PYTHON", "").lower() in ("1", "true", "yes")

if not _force_py:
    try:
        from . import _fmm_cy as _kernel

        KERNEL_NAME = "compiled"
    except ImportError:
        _kernel = _fmm_py
        KERNEL_NAME = "python"
else:
    _kernel = _fmm_py
    KERNEL_NAME = "python"

march = _kernel.march


def available_kernels() -> dict:
    """Every importable kernel module, keyed by name."""
    kernels = {"python": _fmm_py}
    try:
        from . import _fmm_cy

        kernels["compiled"] = _fmm_cy
    except ImportError:
        pass
    return kernels
