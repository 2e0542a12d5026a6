"""Classical shape-from-focus: winner-takes-all depth, all-in-focus
composition and focus-measure curves."""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .stackio import atomic_path

UNITS = ("index", "focal-distance")


@dataclass(frozen=True)
class DepthMap:
    """H x W depth in slice-index units or in the manifest's focal-distance units."""

    values: np.ndarray
    unit: str = "index"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"depth map must be 2-D, got {values.shape}")
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("depth map contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class FMCurve:
    pixel: tuple
    values: np.ndarray
    argmax_index: int
    gt_index: Optional[int] = None

    def to_csv(self, path):
        with atomic_path(path) as tmp:
            with open(tmp, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["slice_index", "focus_value"])
                for i, v in enumerate(self.values):
                    w.writerow([i, repr(float(v))])


def _values(fv):
    return np.asarray(getattr(fv, "values", fv), dtype=np.float64)


def wta_depth(fv, unit="index", distances=None):
    """Per-pixel argmax over slices; ties go to the smallest index."""
    vol = _values(fv)
    idx = np.argmax(vol, axis=0)
    if unit == "index":
        return DepthMap(idx.astype(np.float64), "index")
    if unit == "focal-distance":
        if distances is None or len(distances) != vol.shape[0]:
            raise ValueError("focal-distance output needs one distance per slice")
        return DepthMap(np.asarray(distances, dtype=np.float64)[idx], "focal-distance")
    raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")


def all_in_focus(stack, depth):
    """Select, per pixel, the slice named by the (rounded) index depth map."""
    if getattr(depth, "unit", "index") != "index":
        raise ValueError("all-in-focus composition needs an index-unit depth map")
    d = np.asarray(getattr(depth, "values", depth), dtype=np.float64)
    if d.shape != (stack.H, stack.W):
        raise ValueError(f"depth shape {d.shape} does not match stack {(stack.H, stack.W)}")
    idx = np.rint(d).astype(np.intp)
    if idx.min() < 0 or idx.max() >= stack.S:
        raise ValueError(f"depth indices outside [0, {stack.S - 1}]")
    rows, cols = np.indices(idx.shape)
    return stack.data[idx, rows, cols]


def fm_curve(fv, pixel, gt=None):
    """Focus values of pixel ``(x, y)`` across slices."""
    vol = _values(fv)
    x, y = pixel
    S, H, W = vol.shape
    if not (0 <= x < W and 0 <= y < H):
        raise ValueError(f"pixel {pixel} outside {W}x{H} volume")
    curve = vol[:, y, x].copy()
    gt_index = None
    if gt is not None:
        gt_index = int(round(float(np.asarray(getattr(gt, "values", gt))[y, x])))
    return FMCurve((int(x), int(y)), curve, int(np.argmax(curve)), gt_index)
