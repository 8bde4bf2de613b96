"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; set
``COINCIDE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"
if not os.environ.get("COINCIDE_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

support_eval = _impl.support_eval
segment_distances = _impl.segment_distances
