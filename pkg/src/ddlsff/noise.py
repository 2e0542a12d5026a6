"""Seeded noise injection for focal stacks.

Each slice draws from its own stream ``(seed, slice_index)`` of the
generator in :mod:`ddlsff.rng`, so slices can be corrupted independently
and in any order. Outputs are clamped to [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from ._parallel import pmap
from .stackio import FocalStack

KINDS = ("gaussian", "salt_pepper", "speckle")

# parameters used for the robustness study
STUDY_PARAMS = {"gaussian": 1e-4, "salt_pepper": 0.005, "speckle": 0.005}


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    param: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"noise kind must be one of {KINDS}, got {self.kind!r}")
        if not np.isfinite(self.param) or self.param <= 0:
            raise ValueError(f"noise parameter must be > 0, got {self.param}")
        if self.kind == "salt_pepper" and self.param >= 1:
            raise ValueError(f"salt-and-pepper density must be < 1, got {self.param}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _corrupt_slice(img, spec, stream):
    H, W, C = img.shape
    if spec.kind == "gaussian":
        n = rng.normals(spec.seed, stream, H * W * C).reshape(H, W, C)
        return np.clip(img + np.sqrt(spec.param) * n, 0.0, 1.0)
    if spec.kind == "speckle":
        n = rng.normals(spec.seed, stream, H * W * C).reshape(H, W, C)
        return np.clip(img + img * (np.sqrt(spec.param) * n), 0.0, 1.0)
    u = rng.uniforms(spec.seed, stream, 2 * H * W)
    hit = (u[0::2] < spec.param).reshape(H, W)
    salt = (u[1::2] >= 0.5).reshape(H, W)
    out = img.copy()
    out[hit & ~salt] = 0.0
    out[hit & salt] = 1.0
    return out


def apply_noise(stack, spec):
    """Return a corrupted copy of ``stack``; the input is left untouched."""
    slices = pmap(lambda s: _corrupt_slice(stack.data[s], spec, s), range(stack.S))
    return FocalStack(np.stack(slices), stack.focal_distances)
