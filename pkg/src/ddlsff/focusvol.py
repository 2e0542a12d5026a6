"""Multi-scale DDL focus volumes, their cumulative (progressive) variants,
the 3x3 Laplacian baseline and the focus aggregation map fed to the
refiner.
"""

from dataclasses import dataclass

import numpy as np

from .convolve import directional_energy
from .kernels import ANGLES, ddl_bank, standard_laplacian


@dataclass(frozen=True)
class FocusVolume:
    """S x H x W non-negative sharpness field.

    ``rates`` lists the dilation rates that contributed: ``(r,)`` for a
    single-rate DDL volume, ``(1, ..., r)`` for a cumulative variant and
    ``()`` for the Laplacian baseline.
    """

    values: np.ndarray
    rates: tuple = ()
    kind: str = "ddl"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError(f"focus volume must be (S, H, W), got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rates", tuple(int(r) for r in self.rates))

    @property
    def shape(self):
        return self.values.shape

    @property
    def S(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class FocusAggregationMap:
    """Rate-major concatenation ``[G(r1) slices..., G(r2) slices..., ...]``."""

    values: np.ndarray
    rates: tuple
    S: int

    @property
    def depth(self):
        return self.values.shape[0]

    def block(self, i):
        return self.values[i * self.S:(i + 1) * self.S]


def _energy_volume(stack, kernels, border, backend):
    S, H, W, C = stack.data.shape
    out = np.zeros((S, H, W), dtype=np.float64)
    for s in range(S):
        for c in range(C):
            directional_energy(stack.data[s, :, :, c], kernels, border, out=out[s], backend=backend)
    return out


def ddl_focus_volume(stack, r, border="replicate", backend=None):
    """Squared DDL responses averaged over the four directions and all channels."""
    n = len(ANGLES) * stack.channels
    energy = _energy_volume(stack, ddl_bank(r), border, backend)
    return FocusVolume(energy / n, rates=(r,), kind="ddl")


def multiscale_volumes(stack, R=4, border="replicate", backend=None):
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    return [ddl_focus_volume(stack, r, border, backend) for r in range(1, R + 1)]


def _pairwise_sum(arrays):
    while len(arrays) > 1:
        nxt = [arrays[i] + arrays[i + 1] for i in range(0, len(arrays) - 1, 2)]
        if len(arrays) % 2:
            nxt.append(arrays[-1])
        arrays = nxt
    return arrays[0]


def cumulative_variant(volumes, r):
    """Element-wise mean of the first ``r`` volumes (r is 1-based)."""
    if not 1 <= r <= len(volumes):
        raise ValueError(f"r must be in [1, {len(volumes)}], got {r}")
    chosen = list(volumes[:r])
    shapes = {v.shape for v in chosen}
    if len(shapes) != 1:
        raise ValueError(f"volume shapes differ: {sorted(shapes)}")
    rates = tuple(x for v in chosen for x in v.rates)
    return FocusVolume(_pairwise_sum([v.values for v in chosen]) / r, rates=rates, kind="cumulative")


def aggregation_map(volumes):
    if not volumes:
        raise ValueError("no focus volumes given")
    shapes = {v.shape for v in volumes}
    if len(shapes) != 1:
        raise ValueError(f"volume shapes differ: {sorted(shapes)}")
    values = np.concatenate([v.values for v in volumes], axis=0)
    rates = tuple(v.rates[0] if len(v.rates) == 1 else v.rates for v in volumes)
    return FocusAggregationMap(values, rates, volumes[0].S)


def laplacian_focus_volume(stack, border="replicate", backend=None):
    """Baseline: squared 4-neighbour Laplacian response averaged over channels."""
    energy = _energy_volume(stack, [standard_laplacian()], border, backend)
    return FocusVolume(energy / stack.channels, rates=(), kind="lap")
