"""2-D convolution of single-channel images with small sparse integer kernels.

Only the nonzero taps are visited. Accumulation is float64 in row-major
tap order; the result is bit-identical between the compiled and the numpy
backend and independent of the thread count.
"""

import numpy as np

from . import _backend
from ._parallel import get_threads, pmap

BORDERS = ("replicate", "reflect", "zero")
_NP_MODE = {"replicate": "edge", "reflect": "reflect", "zero": "constant"}


def pad_image(img, pad, border="replicate"):
    """Pad a 2-D image by ``pad`` pixels on every side.

    ``reflect`` mirrors about the edge pixel without repeating it
    (``d c b | a b c d | c b a``).
    """
    if border not in _NP_MODE:
        raise ValueError(f"border must be one of {BORDERS}, got {border!r}")
    img = np.asarray(img, dtype=np.float64)
    if pad == 0:
        return np.ascontiguousarray(img)
    return np.ascontiguousarray(np.pad(img, pad, mode=_NP_MODE[border]))


def _tap_table(kernel):
    # convolution reads img(p - q): negate the kernel offsets
    taps = kernel.nonzero()
    dy = np.array([-t[0] for t in taps], dtype=np.intp)
    dx = np.array([-t[1] for t in taps], dtype=np.intp)
    w = np.array([t[2] for t in taps], dtype=np.float64)
    return dy, dx, w


def _bands(H, n):
    n = max(1, min(n, H))
    edges = np.linspace(0, H, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_banded(fn, padded, pad, out):
    """Call ``fn(padded_band, out_band)`` over horizontal bands of rows."""
    H = out.shape[0]

    def work(band):
        y0, y1 = band
        fn(padded[y0:y1 + 2 * pad], out[y0:y1])

    pmap(work, _bands(H, get_threads()))


def _validate(img, kernel):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"conv2d expects a single-channel 2-D image, got shape {img.shape}")
    if kernel.size > min(img.shape):
        raise ValueError(f"kernel size {kernel.size} exceeds image size {img.shape}")
    return img


def conv2d(img, kernel, border="replicate", backend=None):
    """Convolve a 2-D image with ``kernel``; output has the input's shape."""
    img = _validate(img, kernel)
    k = _backend.get(backend)
    pad = kernel.center
    padded = pad_image(img, pad, border)
    dy, dx, w = _tap_table(kernel)
    out = np.empty(img.shape, dtype=np.float64)
    _run_banded(lambda p, o: k.sparse_conv(p, pad, dy, dx, w, o), padded, pad, out)
    return out


def directional_energy(img, kernels, border="replicate", out=None, backend=None):
    """Accumulate ``sum_k (kernels[k] * img)**2`` into ``out`` (float64, H x W).

    All kernels must share one size and the same number of nonzero taps.
    Directions are accumulated in list order.
    """
    img = _validate(img, kernels[0])
    k = _backend.get(backend)
    pad = max(kern.center for kern in kernels)
    tables = [_tap_table(kern) for kern in kernels]
    nt = {len(t[2]) for t in tables}
    if len(nt) != 1:
        raise ValueError("kernels must have equal numbers of nonzero taps")
    dy = np.ascontiguousarray(np.stack([t[0] for t in tables]))
    dx = np.ascontiguousarray(np.stack([t[1] for t in tables]))
    w = np.ascontiguousarray(np.stack([t[2] for t in tables]))
    padded = pad_image(img, pad, border)
    if out is None:
        out = np.zeros(img.shape, dtype=np.float64)
    _run_banded(lambda p, o: k.accumulate_energy(p, pad, dy, dx, w, o), padded, pad, out)
    return out
