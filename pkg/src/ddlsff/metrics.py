"""Depth-map evaluation metrics.

Relative metrics (AbsRel, SqRel, the 1.25^k accuracies) divide by the
ground truth and are therefore computed over valid pixels with gt > 0;
logRMS additionally needs pred > 0. The pixel counts of every subset are
reported alongside the values.
"""

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

BADPIX_RANGE_FRACTION = 0.07


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rms: float
    log_rms: float
    abs_rel: float
    sq_rel: float
    acc_125: float
    acc_125_2: float
    acc_125_3: float
    badpix: float
    corr: float
    badpix_threshold: float
    valid_pixel_count: int
    rel_pixel_count: int
    log_pixel_count: int

    def to_dict(self):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in asdict(self).items()}


def _as_array(d):
    return np.asarray(getattr(d, "values", d), dtype=np.float64)


def _check_pair(pred, gt):
    pu, gu = getattr(pred, "unit", None), getattr(gt, "unit", None)
    if pu is not None and gu is not None and pu != gu:
        raise ValueError(f"unit mismatch: pred is {pu}, gt is {gu}")
    p, g = _as_array(pred), _as_array(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    return p, g


def pearson(x, y):
    """Pearson correlation; NaN with a warning when either input is constant."""
    x = x - x.mean()
    y = y - y.mean()
    sxx = np.dot(x, x)
    syy = np.dot(y, y)
    if sxx == 0 or syy == 0:
        warnings.warn("correlation undefined for zero-variance input", RuntimeWarning)
        return math.nan
    r = float(np.dot(x, y) / math.sqrt(sxx * syy))
    return min(1.0, max(-1.0, r))


def evaluate(pred, gt, mask=None, badpix_threshold=None):
    """Compute the full metric set over pixels where ``mask`` is true.

    ``badpix_threshold`` defaults to 7% of the valid ground-truth range.
    """
    p, g = _check_pair(pred, gt)
    valid = np.isfinite(g) & np.isfinite(p)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != g.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {g.shape}")
        valid &= mask
    n = int(valid.sum())
    if n == 0:
        raise ValueError("no valid pixels to evaluate")
    d, t = p[valid], g[valid]
    if badpix_threshold is None:
        badpix_threshold = BADPIX_RANGE_FRACTION * float(t.max() - t.min())

    err = d - t
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))

    rel = t > 0
    n_rel = int(rel.sum())
    if n_rel:
        tr, dr = t[rel], d[rel]
        abs_rel = float(np.mean(np.abs(dr - tr) / tr))
        sq_rel = float(np.mean((dr - tr) ** 2 / tr))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dr > 0, np.maximum(dr / tr, tr / dr), np.inf)
        acc = [float(100.0 * np.mean(ratio < 1.25 ** k)) for k in (1, 2, 3)]
    else:
        abs_rel = sq_rel = math.nan
        acc = [math.nan] * 3

    pos = (t > 0) & (d > 0)
    n_log = int(pos.sum())
    if n_log:
        ld = np.log(d[pos]) - np.log(t[pos])
        log_rms = float(np.sqrt(np.mean(ld * ld)))
    else:
        log_rms = math.nan

    return MetricsReport(
        mae=mae, mse=mse, rms=math.sqrt(mse), log_rms=log_rms,
        abs_rel=abs_rel, sq_rel=sq_rel,
        acc_125=acc[0], acc_125_2=acc[1], acc_125_3=acc[2],
        badpix=float(100.0 * np.mean(np.abs(err) > badpix_threshold)),
        corr=pearson(d, t),
        badpix_threshold=float(badpix_threshold),
        valid_pixel_count=n, rel_pixel_count=n_rel, log_pixel_count=n_log,
    )


def _minmax(a):
    lo, hi = a.min(), a.max()
    if hi == lo:
        raise ValueError("cannot min-max normalise a constant map")
    return (a - lo) / (hi - lo)


def normalized_rms(pred, gt):
    """RMS difference after min-max scaling each map to [0, 1] on its own."""
    p, g = _check_pair(pred, gt)
    diff = _minmax(p) - _minmax(g)
    return float(np.sqrt(np.mean(diff * diff)))
