"""Backend selection for the numerical kernels.

The Cython extension is used when it was built and ``TRIQNET_PURE_PYTHON`` is
unset or ``0``; otherwise the numpy fallback is used. ``BACKEND`` reports which.
"""
import os

from . import _pykernels

_force_python = os.environ.get("TRIQNET_PURE_PYTHON", "0") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure python requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

lindblad_rk4 = _impl.lindblad_rk4
jacobi_eigh = _impl.jacobi_eigh


def available_backends():
    """Map of backend name to kernel module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
