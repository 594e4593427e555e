"""Select the kernel implementation at import time.

The compiled extension is preferred.  Setting ``CONTACTFLOW_BACKEND=python``
forces the numpy fallback, which is also used automatically when the
extension was not built.
"""

import os

from . import _kernels_py

_forced = os.environ.get("CONTACTFLOW_BACKEND", "").strip().lower()

if _forced == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
