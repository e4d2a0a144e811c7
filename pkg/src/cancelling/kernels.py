"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``CANCELLING_PURE_PYTHON=1`` forces the
fallback (used by the benchmark and by the backend parity tests).
"""

import os

from . import _kernels_py

if os.environ.get("CANCELLING_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

if _compiled is not None:
    jacobi_svd_batch = _compiled.jacobi_svd_batch
else:
    jacobi_svd_batch = _kernels_py.jacobi_svd_batch


def available_backends():
    """Map backend name to its ``jacobi_svd_batch`` implementation."""
    out = {"python": _kernels_py.jacobi_svd_batch}
    if _compiled is not None:
        out["compiled"] = _compiled.jacobi_svd_batch
    return out
