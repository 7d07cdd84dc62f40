"""Pick the compiled core when available, else the numpy fallback."""

from __future__ import annotations

import os

from . import _pycore

if os.environ.get("CRRBF_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pycore
    BACKEND = "python"
else:
    try:
        from . import _ccore as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pycore
        BACKEND = "python"

weighted_rbf_gram = _impl.weighted_rbf_gram
weighted_rbf_gram_sym = _impl.weighted_rbf_gram_sym
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "smo_solve", "weighted_rbf_gram", "weighted_rbf_gram_sym"]
