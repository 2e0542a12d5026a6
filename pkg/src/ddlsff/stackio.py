"""Focal stacks: loading, validation, grayscale conversion, mean image,
and image / depth-map file I/O (PNG, PGM, PFM, 16-bit PNG + range sidecar).

Images are numpy arrays of shape (H, W, C) with C in {1, 3} and values in
[0, 1]. A stack holds them as one (S, H, W, C) float64 array.
"""

import json
import os
import tempfile
import warnings
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from ._parallel import pmap

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm", ".pfm")
COLOR_MODES = ("gray", "rgb")


class StackError(ValueError):
    """Invalid stack, manifest or image content."""


@contextmanager
def atomic_path(path):
    """Yield a temporary path next to ``path``; rename over it on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path, text):
    with atomic_path(path) as tmp:
        tmp.write_text(text)


def _strictly_monotonic(values):
    d = np.diff(np.asarray(values, dtype=np.float64))
    return bool(np.all(d > 0) or np.all(d < 0))


@dataclass(frozen=True)
class FocalStack:
    """S co-registered slices with their focal distances."""

    data: np.ndarray
    focal_distances: tuple

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 3:
            data = data[..., None]
        if data.ndim != 4 or data.shape[-1] not in (1, 3):
            raise StackError(f"stack data must be (S, H, W, C) with C in (1, 3), got {data.shape}")
        if data.shape[0] < 1:
            raise StackError("stack is empty")
        if not np.all(np.isfinite(data)):
            raise StackError("stack contains non-finite values")
        dist = tuple(float(d) for d in self.focal_distances)
        if len(dist) != data.shape[0]:
            raise StackError(f"{data.shape[0]} slices but {len(dist)} focal distances")
        if len(dist) > 1 and not _strictly_monotonic(dist):
            raise StackError(f"focal distances must be strictly monotonic: {dist}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "focal_distances", dist)

    @property
    def S(self):
        return self.data.shape[0]

    @property
    def H(self):
        return self.data.shape[1]

    @property
    def W(self):
        return self.data.shape[2]

    @property
    def channels(self):
        return self.data.shape[3]

    def slices(self):
        return [self.data[s] for s in range(self.S)]


@dataclass(frozen=True)
class StackManifest:
    image_paths: tuple
    focal_distances: tuple
    color_mode: str = "gray"

    def __post_init__(self):
        object.__setattr__(self, "image_paths", tuple(str(p) for p in self.image_paths))
        object.__setattr__(self, "focal_distances", tuple(float(d) for d in self.focal_distances))
        if len(self.image_paths) != len(self.focal_distances):
            raise StackError("manifest image and focal-distance lists differ in length")
        if self.color_mode not in COLOR_MODES:
            raise StackError(f"color_mode must be one of {COLOR_MODES}, got {self.color_mode!r}")

    def to_json(self):
        return {"images": list(self.image_paths), "focal_distances": list(self.focal_distances),
                "color_mode": self.color_mode}


def read_manifest(path):
    """Parse a JSON manifest; relative image paths resolve against its directory."""
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    try:
        images = doc["images"]
        distances = doc["focal_distances"]
    except (KeyError, TypeError) as exc:
        raise StackError(f"manifest {path} lacks key {exc}") from None
    base = path.parent
    images = [str(p) if Path(p).is_absolute() else str(base / p) for p in images]
    return StackManifest(images, distances, doc.get("color_mode", "gray"))


def write_manifest(path, manifest, relative_to=None):
    doc = manifest.to_json()
    if relative_to is not None:
        doc["images"] = [os.path.relpath(p, relative_to) for p in doc["images"]]
    write_text_atomic(path, json.dumps(doc, indent=2) + "\n")


# --- PFM ---------------------------------------------------------------

def read_pfm(path):
    """Read a PFM file into an (H, W) or (H, W, 3) float32 array, top row first."""
    with open(path, "rb") as fh:
        tag = fh.readline().strip()
        if tag == b"Pf":
            channels = 1
        elif tag == b"PF":
            channels = 3
        else:
            raise StackError(f"{path}: not a PFM file")
        dims = fh.readline().split()
        while not dims:
            dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        dtype = "<f4" if scale < 0 else ">f4"
        buf = fh.read(width * height * channels * 4)
    if len(buf) != width * height * channels * 4:
        raise StackError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(buf, dtype=dtype).astype(np.float32)
    arr = arr.reshape(height, width, channels)[::-1]
    if channels == 1:
        arr = arr[..., 0]
    return np.ascontiguousarray(arr)


def write_pfm(path, arr):
    """Write a 2-D (``Pf``) or H x W x 3 (``PF``) array as little-endian PFM."""
    arr = np.asarray(arr)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[..., 0]
    if arr.ndim == 2:
        tag = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        tag = b"PF"
    else:
        raise StackError(f"cannot write shape {arr.shape} as PFM")
    height, width = arr.shape[:2]
    payload = np.ascontiguousarray(arr[::-1], dtype="<f4").tobytes()
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as fh:
            fh.write(tag + b"\n" + f"{width} {height}\n".encode() + b"-1.0\n")
            fh.write(payload)


# --- raster images -----------------------------------------------------

def load_image(path, color_mode="gray"):
    """Decode an image into (H, W, C) float64 in [0, 1].

    Integer images are divided by their maximum code value (255 or 65535).
    ``color_mode`` picks C: "gray" keeps one channel (RGB inputs are
    averaged), "rgb" yields three (gray inputs are replicated).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image not found: {path}")
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES:
        raise StackError(f"unsupported image format: {path}")
    if suffix == ".pfm":
        arr = read_pfm(path).astype(np.float64)
    else:
        try:
            with PILImage.open(path) as im:
                im.load()
                arr = _pil_to_unit(im)
        except PILImage.UnidentifiedImageError as exc:
            raise StackError(f"cannot decode {path}: {exc}") from None
    if arr.ndim == 2:
        arr = arr[..., None]
    if color_mode == "gray" and arr.shape[2] == 3:
        arr = _gray(arr)
    elif color_mode == "rgb" and arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return arr


def _pil_to_unit(im):
    mode = im.mode
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        return np.asarray(im, dtype=np.float64) / 65535.0
    if mode in ("L", "RGB"):
        return np.asarray(im, dtype=np.float64) / 255.0
    if mode in ("LA", "RGBA", "P", "1", "CMYK", "YCbCr"):
        target = "L" if mode in ("LA", "1") else "RGB"
        return np.asarray(im.convert(target), dtype=np.float64) / 255.0
    if mode == "F":
        return np.asarray(im, dtype=np.float64)
    raise StackError(f"unsupported image mode {mode}")


def write_image(path, img, bits=8):
    """Write a [0, 1] image as PNG. 16-bit output only for single-channel images."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    img = np.clip(img, 0.0, 1.0)
    if bits == 16:
        if img.ndim != 2:
            raise StackError("16-bit output supports single-channel images only")
        pil = PILImage.fromarray(np.round(img * 65535.0).astype(np.uint16))
    else:
        pil = PILImage.fromarray(np.round(img * 255.0).astype(np.uint8))
    with atomic_path(path) as tmp:
        pil.save(tmp, format="PNG")


# --- stacks ------------------------------------------------------------

def load_stack(manifest, color_mode=None):
    """Load every slice of a manifest (or manifest path) into a FocalStack."""
    if not isinstance(manifest, StackManifest):
        manifest = read_manifest(manifest)
    mode = color_mode or manifest.color_mode
    if len(manifest.image_paths) < 1:
        raise StackError("manifest lists no images")
    dist = manifest.focal_distances
    if len(dist) > 1 and not _strictly_monotonic(dist):
        raise StackError(f"focal distances must be strictly monotonic: {dist}")
    for p in manifest.image_paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"image not found: {p}")
    images = pmap(lambda p: load_image(p, mode), manifest.image_paths)
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise StackError(f"slice dimensions differ: {sorted(shapes)}")
    return FocalStack(np.stack(images), dist)


def _gray(arr, weights=None):
    if weights is None:
        return (arr[..., 0:1] + arr[..., 1:2] + arr[..., 2:3]) / 3.0
    w = np.asarray(weights, dtype=np.float64)
    return (w[0] * arr[..., 0:1] + w[1] * arr[..., 1:2] + w[2] * arr[..., 2:3]) / w.sum()


def to_grayscale(stack, weights=None):
    """Average the colour channels; grayscale stacks pass through unchanged."""
    if stack.channels == 1:
        return stack
    return FocalStack(_gray(stack.data, weights), stack.focal_distances)


def mean_image(stack):
    """Per-pixel, per-channel mean over slices, shape (H, W, C)."""
    data = stack.data if isinstance(stack, FocalStack) else np.asarray(stack, dtype=np.float64)
    if data.shape[0] == 0:
        raise StackError("cannot average an empty stack")
    # shifting by the per-pixel minimum makes equal slices average back exactly
    ref = data.min(axis=0)
    return ref + (data - ref).sum(axis=0) / data.shape[0]


# --- depth maps --------------------------------------------------------

def _sidecar(path):
    return Path(str(path) + ".range.txt")


def write_depth(depth, path, fmt="pfm"):
    """Write a depth map as PFM (raw float32) or 16-bit PNG with a range sidecar.

    The PNG maps [min, max] linearly onto [0, 65535]; ``<path>.range.txt``
    holds "min max" so :func:`read_depth` can invert it.
    """
    values = np.asarray(getattr(depth, "values", depth), dtype=np.float64)
    if values.ndim != 2:
        raise StackError(f"depth map must be 2-D, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise StackError("depth map contains NaN or Inf")
    if fmt == "pfm":
        write_pfm(path, values.astype(np.float32))
    elif fmt == "png16":
        lo, hi = float(values.min()), float(values.max())
        scaled = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
        pil = PILImage.fromarray(np.round(scaled * 65535.0).astype(np.uint16))
        with atomic_path(path) as tmp:
            pil.save(tmp, format="PNG")
        write_text_atomic(_sidecar(path), f"{lo!r} {hi!r}\n")
    else:
        raise StackError(f"unknown depth format {fmt!r}")


def read_depth(path):
    """Read a depth map written by :func:`write_depth` as a float64 array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"depth map not found: {path}")
    if path.suffix.lower() == ".pfm":
        arr = read_pfm(path)
        if arr.ndim != 2:
            raise StackError(f"{path}: expected a single-channel PFM")
        return arr.astype(np.float64)
    with PILImage.open(path) as im:
        raw = np.asarray(im, dtype=np.float64)
    side = _sidecar(path)
    if side.exists():
        lo, hi = (float(v) for v in side.read_text().split())
        return lo + raw / 65535.0 * (hi - lo)
    warnings.warn(f"no range sidecar for {path}; returning raw 16-bit codes")
    return raw
