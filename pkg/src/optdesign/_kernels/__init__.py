"""Backend selection for the scan kernels.

The compiled Cython kernels are used when the extension built successfully;
otherwise the NumPy fallback takes over with identical semantics.  Setting
``OPTD_PURE=1`` forces the fallback (useful for benchmarking and debugging).
"""

import os

from optdesign._kernels import _pure

if os.environ.get("OPTD_PURE", "") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from optdesign._kernels import _cyk as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

quad_forms = _impl.quad_forms
fused_scan = _impl.fused_scan

__all__ = ["BACKEND", "quad_forms", "fused_scan"]
