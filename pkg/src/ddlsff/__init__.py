"""Shape from focus with multi-scale directional dilated Laplacian focus volumes."""

from . import _backend

__version__ = "0.1.0"

#: name of the active kernel backend, "cython" or "python"
BACKEND = _backend.name
