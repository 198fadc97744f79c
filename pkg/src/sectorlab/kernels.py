"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``SECTORLAB_PURE=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SECTORLAB_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

band_ldlt = _impl.band_ldlt
band_ldlt_solve = _impl.band_ldlt_solve
csr_matvec = _impl.csr_matvec

__all__ = ["BACKEND", "band_ldlt", "band_ldlt_solve", "csr_matvec"]
