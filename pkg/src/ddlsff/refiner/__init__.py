"""Toy-scale recurrent depth refiner with seeded weights (forward only)."""

from .model import (
    DEFAULT_ITERS,
    ContextBiases,
    RefineResult,
    build_weights,
    context_encode,
    convex_upsample,
    convex_weights,
    fuse_features,
    gru_update,
    pool_to_quarter,
    refine,
    sequence_loss,
)
from .weights import RefinerConfig, RefinerWeights

__all__ = [
    "DEFAULT_ITERS", "ContextBiases", "RefineResult", "RefinerConfig", "RefinerWeights",
    "build_weights", "context_encode", "convex_upsample", "convex_weights", "fuse_features",
    "gru_update", "pool_to_quarter", "refine", "sequence_loss",
]
