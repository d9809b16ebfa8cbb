"""Selects the compiled kernels when available, else the numpy fallback.

Set ``GMIKIT_PURE=1`` to force the fallback (used by the benchmark and the
kernel-agreement tests).
"""
import os

from . import _fallback

BACKEND = "python"
uniform_stream = _fallback.uniform_stream
jacobi_eigen = _fallback.jacobi_eigen

if not os.environ.get("GMIKIT_PURE"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        uniform_stream = _kernels.uniform_stream
        jacobi_eigen = _kernels.jacobi_eigen
