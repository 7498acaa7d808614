"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Set ``MONOSTEREO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from monostereo import _pykernels as python_kernels

try:
    from monostereo import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("MONOSTEREO_PURE_PYTHON", "") in ("", "0"):
    impl = compiled_kernels
    BACKEND = "cython"
else:
    impl = python_kernels
    BACKEND = "python"


def available_backends():
    backends = {"python": python_kernels}
    if compiled_kernels is not None:
        backends["cython"] = compiled_kernels
    return backends
