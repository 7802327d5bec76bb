"""Hot rate/sweep kernels with backend selection at import time.

The compiled Cython extension is preferred; set ``RISLINK_PURE_PYTHON=1`` to
force the NumPy fallback (the two are numerically interchangeable).
"""

import os

from . import _numpy as _np_backend

if os.environ.get("RISLINK_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _np_backend
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _np_backend

BACKEND = _impl.BACKEND
user_rates = _impl.user_rates
greedy_beam_rates = _impl.greedy_beam_rates

numpy_backend = _np_backend

__all__ = ["BACKEND", "user_rates", "greedy_beam_rates", "numpy_backend"]
