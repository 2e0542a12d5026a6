"""Pure-numpy twins of the compiled kernels in ``_ckernels.pyx``.

Same signatures, same per-pixel accumulation order, so results are
bit-identical to the compiled path.
"""

import numpy as np


def _window(padded, pad, dy, dx, H, W):
    y0 = pad + int(dy)
    x0 = pad + int(dx)
    return padded[y0:y0 + H, x0:x0 + W]


def sparse_conv(padded, pad, dy, dx, w, out):
    H, W = out.shape
    acc = np.zeros((H, W), dtype=np.float64)
    for k in range(len(w)):
        acc = acc + w[k] * _window(padded, pad, dy[k], dx[k], H, W)
    out[...] = acc


def accumulate_energy(padded, pad, dy, dx, w, out):
    H, W = out.shape
    nd, nt = w.shape
    for d in range(nd):
        acc = np.zeros((H, W), dtype=np.float64)
        for k in range(nt):
            acc = acc + w[d, k] * _window(padded, pad, dy[d, k], dx[d, k], H, W)
        out += acc * acc
