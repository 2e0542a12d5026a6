"""Forward-only multi-scale ConvGRU depth refiner.

Feature maps are (C, H, W) float64 arrays. Three GRUs run at 1/16, 1/8
and 1/4 of the input resolution; the finest one drives a depth head whose
updates accumulate on a zero-initialised 1/4-resolution depth map, which
is convex-upsampled back to full resolution after every iteration.
"""

from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .._parallel import blas_threads
from . import nn
from .weights import SCALES, RefinerConfig, RefinerWeights

FACTOR = 4
DEFAULT_ITERS = 32


@dataclass(frozen=True)
class ContextBiases:
    """Gate biases ``(c_z, c_r, c_h)`` per GRU scale, each (hidden, H/q, W/q)."""

    by_scale: dict

    def __getitem__(self, q):
        return self.by_scale[q]


@dataclass
class GateStats:
    """Running extremes of gate activations, for invariant checks."""

    z: list = field(default_factory=lambda: [np.inf, -np.inf])
    r: list = field(default_factory=lambda: [np.inf, -np.inf])
    cand: list = field(default_factory=lambda: [np.inf, -np.inf])
    h: list = field(default_factory=lambda: [np.inf, -np.inf])

    def update(self, **arrays):
        for key, a in arrays.items():
            lo_hi = getattr(self, key)
            lo_hi[0] = min(lo_hi[0], float(a.min()))
            lo_hi[1] = max(lo_hi[1], float(a.max()))


@dataclass
class RefineResult:
    depth: np.ndarray
    intermediates: list
    coarse: list
    updates: list
    mask_logits: np.ndarray
    gates: GateStats


def _check_divisible(H, W):
    if H % 16 or W % 16:
        raise ValueError(f"input size {H}x{W} must be divisible by 16")


def _chw(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img[None]
    return np.ascontiguousarray(img.transpose(2, 0, 1))


def _res_block(x, w, i):
    p = f"enc.stage{i}"
    y = nn.relu(nn.instance_norm(nn.conv2d(x, w[p + ".conv1.w"], w[p + ".conv1.b"], stride=2)))
    y = nn.instance_norm(nn.conv2d(y, w[p + ".conv2.w"], w[p + ".conv2.b"]))
    skip = nn.conv2d(x, w[p + ".skip.w"], w[p + ".skip.b"], stride=2, pad=0)
    return nn.relu(y + skip)


def context_encode(mean_img, weights):
    """Three residual stages off a strided stem; one bias head per GRU scale."""
    x = _chw(mean_img)
    _check_divisible(x.shape[1], x.shape[2])
    w = weights
    h = w.config.hidden
    with threadpool_limits(blas_threads()):
        x = nn.relu(nn.instance_norm(nn.conv2d(x, w["enc.stem.w"], w["enc.stem.b"], stride=2)))
        out = {}
        for i, q in enumerate(SCALES, start=1):
            x = _res_block(x, w, i)
            c = nn.conv2d(x, w[f"enc.head{q}.w"], w[f"enc.head{q}.b"])
            out[q] = (c[:h], c[h:2 * h], c[2 * h:])
    return ContextBiases(out)


def pool_to_quarter(u):
    """Average-pool an (R*S, H, W) aggregation map by 4."""
    u = np.asarray(getattr(u, "values", u), dtype=np.float64)
    return nn.avg_pool(u, FACTOR)


def fuse_features(prev_depth, u_quarter, weights, activation=True):
    """Concatenate depth with the pooled aggregation map and run two 3x3 convs."""
    d = np.asarray(prev_depth, dtype=np.float64)
    u = np.asarray(u_quarter, dtype=np.float64)
    if d.shape != u.shape[1:]:
        raise ValueError(f"depth {d.shape} and focus map {u.shape[1:]} disagree")
    act = nn.relu if activation else (lambda a: a)
    x = np.concatenate([d[None], u], axis=0)
    x = act(nn.conv2d(x, weights["fuse.conv1.w"], weights["fuse.conv1.b"]))
    return act(nn.conv2d(x, weights["fuse.conv2.w"], weights["fuse.conv2.b"]))


def gru_update(h_prev, b, biases, wz, wr, wh, stats=None):
    """One ConvGRU step; ``b`` is the auxiliary input (C_b, H, W)."""
    cz, cr, ch = biases
    if b.shape[1:] != h_prev.shape[1:]:
        raise ValueError(f"hidden {h_prev.shape} and input {b.shape} disagree spatially")
    hb = np.concatenate([h_prev, b], axis=0)
    z = nn.sigmoid(nn.conv2d(hb, wz) + cz)
    r = nn.sigmoid(nn.conv2d(hb, wr) + cr)
    cand = np.tanh(nn.conv2d(np.concatenate([r * h_prev, b], axis=0), wh) + ch)
    h = (1.0 - z) * h_prev + z * cand
    if stats is not None:
        stats.update(z=z, r=r, cand=cand, h=h)
    return h


def _gru(q, h, b, biases, w, stats):
    return gru_update(h, b, biases[q], w[f"gru{q}.wz"], w[f"gru{q}.wr"], w[f"gru{q}.wh"], stats)


def depth_head(h, w):
    y = nn.relu(nn.conv2d(h, w["depth.conv1.w"], w["depth.conv1.b"]))
    return nn.conv2d(y, w["depth.conv2.w"], w["depth.conv2.b"])[0]


def mask_head(h, w):
    y = nn.relu(nn.conv2d(h, w["mask.conv1.w"], w["mask.conv1.b"]))
    return nn.conv2d(y, w["mask.conv2.w"], w["mask.conv2.b"], pad=0)


def convex_weights(mask_logits, factor=FACTOR):
    """Softmax over the 9 neighbours: (9, f, f, h, w), channel = k * f*f + i*f + j."""
    m = np.asarray(mask_logits, dtype=np.float64)
    if m.shape[0] != 9 * factor * factor:
        raise ValueError(f"mask needs {9 * factor * factor} channels, got {m.shape[0]}")
    m = m.reshape(9, factor, factor, m.shape[1], m.shape[2])
    m = np.exp(m - m.max(axis=0, keepdims=True))
    return m / m.sum(axis=0, keepdims=True)


def convex_upsample(depth, mask_logits, factor=FACTOR):
    """Each fine pixel is a convex combination of its 3x3 coarse neighbourhood."""
    d = np.asarray(depth, dtype=np.float64)
    wts = convex_weights(mask_logits, factor)
    h, w = d.shape
    if wts.shape[3:] != (h, w):
        raise ValueError(f"mask spatial size {wts.shape[3:]} does not match depth {d.shape}")
    padded = np.pad(d, 1, mode="edge")
    neigh = np.stack([padded[ky:ky + h, kx:kx + w] for ky in range(3) for kx in range(3)])
    up = np.einsum("kijyx,kyx->yixj", wts, neigh)
    return up.reshape(h * factor, w * factor)


def refine(u, biases, weights, iters=DEFAULT_ITERS, zero_depth_head=False):
    """Iterate the GRU hierarchy ``iters`` times starting from zero depth.

    ``u`` is the full-resolution (R*S, H, W) aggregation map.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    u = np.asarray(getattr(u, "values", u), dtype=np.float64)
    _check_divisible(u.shape[1], u.shape[2])
    if u.shape[0] != weights.config.u_channels:
        raise ValueError(f"weights expect {weights.config.u_channels} focus slices, got {u.shape[0]}")
    w = weights.with_zeroed("depth.") if zero_depth_head else weights
    stats = GateStats()
    result = RefineResult(None, [], [], [], None, stats)
    with threadpool_limits(blas_threads()):
        uq = pool_to_quarter(u)
        h = {q: np.tanh(biases[q][2]) for q in SCALES}
        d = np.zeros(uq.shape[1:], dtype=np.float64)
        for _ in range(iters):
            h[16] = _gru(16, h[16], nn.avg_pool(h[8]), biases, w, stats)
            b8 = np.concatenate([nn.avg_pool(h[4]), nn.upsample2(h[16])], axis=0)
            h[8] = _gru(8, h[8], b8, biases, w, stats)
            m = fuse_features(d, uq, w)
            h[4] = _gru(4, h[4], np.concatenate([m, nn.upsample2(h[8])], axis=0), biases, w, stats)
            delta = depth_head(h[4], w)
            d = d + delta
            logits = mask_head(h[4], w)
            result.updates.append(delta)
            result.coarse.append(d)
            result.mask_logits = logits
            result.intermediates.append(convex_upsample(d, logits))
    result.depth = result.intermediates[-1]
    return result


def build_weights(stack_channels, u_channels, seed):
    return RefinerWeights.generate(RefinerConfig(in_channels=stack_channels, u_channels=u_channels), seed)


def sequence_loss(intermediates, gt, alpha=0.9):
    """Sum over iterations of alpha**(T - t) times the per-pixel MSE."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    g = np.asarray(getattr(gt, "values", gt), dtype=np.float64)
    T = len(intermediates)
    loss = 0.0
    for t, d in enumerate(intermediates, start=1):
        d = np.asarray(getattr(d, "values", d), dtype=np.float64)
        if d.shape != g.shape:
            raise ValueError(f"intermediate {t} has shape {d.shape}, gt {g.shape}")
        loss += alpha ** (T - t) * float(np.mean((g - d) ** 2))
    return loss
