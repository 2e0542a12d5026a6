import math
import warnings

import numpy as np
import pytest

from ddlsff.classic import DepthMap
from ddlsff.metrics import evaluate, normalized_rms, pearson


def test_identity(rng):
    gt = 1 + rng.random((16, 16))
    m = evaluate(gt, gt)
    assert m.mae == m.mse == m.rms == m.log_rms == m.abs_rel == m.sq_rel == 0
    assert m.acc_125 == m.acc_125_2 == m.acc_125_3 == 100
    assert m.badpix == 0 and m.corr == 1.0
    assert m.valid_pixel_count == 256


def test_plus_one_arithmetic():
    gt = np.full((2, 2), 10.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = evaluate(gt + 1, gt)
    assert m.mae == 1 and m.mse == 1 and m.rms == 1
    assert m.abs_rel == pytest.approx(0.1, abs=1e-15)
    assert m.sq_rel == pytest.approx(0.1, abs=1e-15)
    assert m.acc_125 == 100


def test_constant_gt_corr_is_nan_with_warning():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    gt = np.full((2, 2), 2.0)
    with pytest.warns(RuntimeWarning):
        m = evaluate(pred, gt)
    assert math.isnan(m.corr)
    assert m.to_dict()["corr"] is None


def _brute(pred, gt, t):
    """Direct per-pixel loops, written independently of the vectorised code."""
    p, g = pred.ravel().tolist(), gt.ravel().tolist()
    n = len(p)
    err = [a - b for a, b in zip(p, g)]
    out = {"mae": sum(abs(e) for e in err) / n, "mse": sum(e * e for e in err) / n}
    out["abs_rel"] = sum(abs(a - b) / b for a, b in zip(p, g)) / n
    out["sq_rel"] = sum((a - b) ** 2 / b for a, b in zip(p, g)) / n
    out["log_rms"] = math.sqrt(sum((math.log(a) - math.log(b)) ** 2 for a, b in zip(p, g)) / n)
    for k, name in ((1, "acc_125"), (2, "acc_125_2"), (3, "acc_125_3")):
        out[name] = 100 * sum(max(a / b, b / a) < 1.25 ** k for a, b in zip(p, g)) / n
    out["badpix"] = 100 * sum(abs(e) > t for e in err) / n
    mp, mg = sum(p) / n, sum(g) / n
    cov = sum((a - mp) * (b - mg) for a, b in zip(p, g))
    out["corr"] = cov / math.sqrt(sum((a - mp) ** 2 for a in p) * sum((b - mg) ** 2 for b in g))
    return out


def test_against_brute_force(rng):
    for _ in range(5):
        gt = 0.5 + 3 * rng.random((9, 7))
        pred = gt * np.exp(0.4 * rng.standard_normal(gt.shape))
        m = evaluate(pred, gt, badpix_threshold=0.3)
        for k, v in _brute(pred, gt, 0.3).items():
            assert getattr(m, k) == pytest.approx(v, rel=1e-12, abs=1e-12), k


def test_accuracy_monotone(rng):
    for _ in range(100):
        gt = rng.random((8, 8)) + 0.01
        pred = rng.random((8, 8)) * 2
        m = evaluate(pred, gt)
        assert m.acc_125 <= m.acc_125_2 <= m.acc_125_3


def test_rms_squared_is_mse(rng):
    for _ in range(20):
        gt, pred = rng.random((10, 10)), rng.random((10, 10))
        m = evaluate(pred, gt)
        assert abs(m.rms ** 2 - m.mse) <= 1e-9 * m.mse


def test_symmetry_facts(rng):
    gt = 1 + rng.random((6, 6))
    pred = 1 + 2 * rng.random((6, 6))
    a, b = evaluate(pred, gt), evaluate(gt, pred)
    assert a.mae == b.mae and a.mse == b.mse and a.rms == b.rms
    assert a.abs_rel != b.abs_rel and a.sq_rel != b.sq_rel


def test_corr_affine_invariance(rng):
    gt, pred = rng.random((12, 12)), rng.random((12, 12))
    c = evaluate(pred, gt).corr
    assert evaluate(3.5 * pred + 2, gt).corr == pytest.approx(c, abs=1e-12)
    assert -1 <= c <= 1


def test_mask_and_counts():
    gt = np.array([[0.0, 1.0], [2.0, 4.0]])
    pred = np.array([[1.0, 1.0], [-1.0, 4.0]])
    m = evaluate(pred, gt, mask=np.array([[True, True], [True, False]]))
    assert m.valid_pixel_count == 3
    assert m.rel_pixel_count == 2      # gt > 0
    assert m.log_pixel_count == 1      # gt > 0 and pred > 0
    assert m.mae == pytest.approx(4 / 3)


def test_default_badpix_threshold():
    gt = np.array([[0.0, 10.0]])
    m = evaluate(gt + 0.5, gt)
    assert m.badpix_threshold == pytest.approx(0.7)
    assert m.badpix == 0
    assert evaluate(gt + 0.8, gt).badpix == 100


def test_errors():
    with pytest.raises(ValueError):
        evaluate(np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        evaluate(DepthMap(np.ones((2, 2)), "index"), DepthMap(np.ones((2, 2)), "focal-distance"))
    with pytest.raises(ValueError):
        evaluate(np.ones((2, 2)), np.ones((2, 2)), mask=np.zeros((2, 2), bool))


def test_pearson_clamped():
    x = np.arange(5.0)
    assert pearson(x, x) == 1.0 and pearson(x, -x) == -1.0


def test_normalized_rms(rng):
    gt = rng.random((8, 8))
    assert normalized_rms(gt, gt) == 0
    assert normalized_rms(2.5 * gt + 7, gt) == pytest.approx(0, abs=1e-12)
    pred = rng.random((8, 8))
    pn = (pred - pred.min()) / (pred.max() - pred.min())
    gn = (gt - gt.min()) / (gt.max() - gt.min())
    expect = math.sqrt(sum((a - b) ** 2 for a, b in zip(pn.ravel(), gn.ravel())) / 64)
    assert normalized_rms(pred, gt) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        normalized_rms(np.ones((3, 3)), gt[:3, :3])
