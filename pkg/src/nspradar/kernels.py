"""Backend selection for the estimator hot loop.

The compiled Cython kernels are used when importable. Setting the
environment variable ``NSPRADAR_BACKEND=python`` forces the NumPy fallback;
``NSPRADAR_BACKEND=compiled`` makes a missing extension an ImportError.
"""
import os

from . import _pykernels

_choice = os.environ.get("NSPRADAR_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _pykernels
        BACKEND = "python"

ml_objective_grid = _impl.ml_objective_grid
argmax_first = _impl.argmax_first
ml_argmax = _impl.ml_argmax

__all__ = ["BACKEND", "ml_objective_grid", "argmax_first", "ml_argmax"]
