"""Select the recipe-saturation kernel at import time.

The compiled extension ``porveq._kernel_c`` is used when it was built;
otherwise (or when ``PORVEQ_PURE=1`` is set) the pure-Python twin is used.
Both expose ``TermTable`` and ``saturate`` with identical behaviour.
"""

from __future__ import annotations

import os

from . import _kernel_py

BACKEND = "python"

if os.environ.get("PORVEQ_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernel_py
else:
    _impl = _kernel_py

TermTable = _impl.TermTable
saturate = _impl.saturate
INF = _kernel_py.INF

__all__ = ["BACKEND", "TermTable", "saturate", "INF"]
