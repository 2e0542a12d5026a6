"""Synthetic focal stacks with exact ground truth.

A sharp texture is blurred per pixel with a Gaussian whose sigma grows
with the distance between the slice index and the pixel's ground-truth
index, so the sharpest slice at every pixel is its ground-truth index by
construction. The blur is a direct weighted sum over a +-3 sigma window;
it is meant as a reference, not as a fast renderer.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .classic import DepthMap
from .kernels import ANGLES
from .stackio import FocalStack

PATTERNS = ("staircase", "slant", "checker")
TEXTURES = ("noise-texture", "checker")
CHECKER_PERIOD = 10  # >= 2 * r_max + 2 for r_max = 4
_TEXTURE_STREAM = 1 << 32


@dataclass(frozen=True)
class SynthSpec:
    H: int = 64
    W: int = 64
    S: int = 10
    depth_pattern: str = "staircase"
    texture: str = "noise-texture"
    blur_scale: float = 2.0
    seed: int = 0
    steps: int = 4
    texture_sigma: float = 0.0

    def __post_init__(self):
        if self.S < 2:
            raise ValueError("a synthetic stack needs S >= 2")
        if self.blur_scale <= 0:
            raise ValueError("blur_scale must be > 0")
        if self.depth_pattern not in PATTERNS:
            raise ValueError(f"depth_pattern must be one of {PATTERNS}")
        if self.texture not in TEXTURES:
            raise ValueError(f"texture must be one of {TEXTURES}")
        if self.H < 1 or self.W < 1:
            raise ValueError("H and W must be positive")
        if not 2 <= self.steps <= self.S:
            raise ValueError("steps must lie in [2, S]")


def gaussian_blur_direct(img, sigma):
    """Normalised Gaussian blur by direct summation, replicate border."""
    if sigma == 0:
        return img.copy()
    k = int(math.ceil(3.0 * sigma))
    offs = np.arange(-k, k + 1)
    w = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * sigma * sigma))
    w /= w.sum()
    H, W = img.shape
    padded = np.pad(img, k, mode="edge")
    out = np.zeros_like(img)
    for i in range(2 * k + 1):
        for j in range(2 * k + 1):
            out += w[i, j] * padded[i:i + H, j:j + W]
    return out


def ground_truth(spec):
    S, H, W = spec.S, spec.H, spec.W
    x = np.arange(W)
    if spec.depth_pattern == "staircase":
        band = np.minimum(x * spec.steps // W, spec.steps - 1)
        levels = np.rint(np.arange(spec.steps) * (S - 1) / (spec.steps - 1))
        row = levels[band]
        gt = np.broadcast_to(row, (H, W))
    elif spec.depth_pattern == "slant":
        gt = np.broadcast_to(np.rint(x * (S - 1) / max(W - 1, 1)), (H, W))
    else:
        block = max(1, max(H, W) // 4)
        yy, xx = np.indices((H, W))
        parity = (yy // block + xx // block) % 2
        lo, hi = round((S - 1) / 4), round(3 * (S - 1) / 4)
        gt = np.where(parity == 0, lo, hi)
    return np.ascontiguousarray(gt, dtype=np.float64)


def texture(spec):
    H, W = spec.H, spec.W
    if spec.texture == "checker":
        yy, xx = np.indices((H, W))
        half = CHECKER_PERIOD // 2
        return ((yy // half + xx // half) % 2).astype(np.float64)
    tex = rng.uniforms(spec.seed, _TEXTURE_STREAM, H * W).reshape(H, W)
    if spec.texture_sigma > 0:
        tex = gaussian_blur_direct(tex, spec.texture_sigma)
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo)


def generate(spec):
    """Return ``(FocalStack, DepthMap)`` with index-unit ground truth."""
    gt = ground_truth(spec)
    tex = texture(spec)
    gt_int = gt.astype(np.int64)
    cache = {}
    slices = []
    for s in range(spec.S):
        dist = np.abs(s - gt_int)
        img = np.empty_like(tex)
        for dd in np.unique(dist):
            if dd not in cache:
                cache[dd] = gaussian_blur_direct(tex, spec.blur_scale * float(dd))
            sel = dist == dd
            img[sel] = cache[dd][sel]
        slices.append(img)
    stack = FocalStack(np.stack(slices)[..., None], tuple(float(s) for s in range(spec.S)))
    return stack, DepthMap(gt, "index")


def edge_distance_mask(gt, margin):
    """True where every pixel within ``margin`` (Chebyshev) shares the centre's depth."""
    H, W = gt.shape
    padded = np.pad(gt, margin, mode="edge")
    keep = np.ones((H, W), dtype=bool)
    for dy in range(-margin, margin + 1):
        for dx in range(-margin, margin + 1):
            keep &= padded[margin + dy:margin + dy + H, margin + dx:margin + dx + W] == gt
    return keep


def textured_mask(img, r=1, eps=1e-6):
    """Pixels where the sharp image has a nonzero DDL response in some direction."""
    from .convolve import conv2d
    from .kernels import ddl_kernel

    resp = sum(conv2d(img, ddl_kernel(r, t)) ** 2 for t in ANGLES)
    return resp > eps
