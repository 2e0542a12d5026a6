"""Minimal forward-only layers on (C, H, W) float64 arrays."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d(x, w, b=None, stride=1, pad=None):
    """Zero-padded cross-correlation. ``w`` is (O, C, k, k)."""
    O, C, k, _ = w.shape
    if x.shape[0] != C:
        raise ValueError(f"conv expects {C} input channels, got {x.shape[0]}")
    if pad is None:
        pad = k // 2
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    Ho, Wo = win.shape[1], win.shape[2]
    cols = np.ascontiguousarray(win.transpose(1, 2, 0, 3, 4)).reshape(Ho * Wo, C * k * k)
    out = (cols @ w.reshape(O, C * k * k).T).T.reshape(O, Ho, Wo)
    if b is not None:
        out = out + b[:, None, None]
    return out


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def instance_norm(x, eps=1e-5):
    mu = x.mean(axis=(1, 2), keepdims=True)
    var = x.var(axis=(1, 2), keepdims=True)
    return (x - mu) / np.sqrt(var + eps)


def avg_pool(x, f=2):
    C, H, W = x.shape
    if H % f or W % f:
        raise ValueError(f"spatial size {H}x{W} not divisible by {f}")
    return x.reshape(C, H // f, f, W // f, f).mean(axis=(2, 4))


def _up_axis(x, axis):
    # half-pixel-centre bilinear x2 along one axis, edge-clamped
    n = x.shape[axis]
    prev = np.take(x, np.r_[0, np.arange(n - 1)], axis=axis)
    nxt = np.take(x, np.r_[np.arange(1, n), n - 1], axis=axis)
    even = 0.75 * x + 0.25 * prev
    odd = 0.75 * x + 0.25 * nxt
    out = np.stack([even, odd], axis=axis + 1)
    shape = list(x.shape)
    shape[axis] = 2 * n
    return out.reshape(shape)


def upsample2(x):
    """Bilinear x2 upsampling (half-pixel centres, clamped borders)."""
    return _up_axis(_up_axis(x, 1), 2)
