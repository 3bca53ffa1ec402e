"""Kernel selection.

The compiled module is used when it imports; set ``PSINFLATION_PURE=1`` to force
the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("PSINFLATION_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

canonicalize_tables = _impl.canonicalize_tables
outcome_histogram = _impl.outcome_histogram

__all__ = ["BACKEND", "canonicalize_tables", "outcome_histogram"]
