"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``DDLSFF_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("DDLSFF_BACKEND", "").lower() != "python":
    kernels = compiled_kernels
    name = "cython"
else:
    kernels = python_kernels
    name = "python"


def get(which=None):
    """Return a kernel module by name ("cython" or "python"), default the active one."""
    if which is None:
        return kernels
    if which == "python":
        return python_kernels
    if which == "cython":
        if compiled_kernels is None:
            raise RuntimeError("compiled kernels are not available")
        return compiled_kernels
    raise ValueError(f"unknown backend {which!r}")
