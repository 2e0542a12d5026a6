import numpy as np
import pytest

from ddlsff.classic import wta_depth
from ddlsff.convolve import directional_energy
from ddlsff.focusvol import ddl_focus_volume
from ddlsff.kernels import ddl_bank
from ddlsff.synth import (
    CHECKER_PERIOD,
    SynthSpec,
    edge_distance_mask,
    gaussian_blur_direct,
    generate,
    ground_truth,
    textured_mask,
    texture,
)
from oracles import border_index, gaussian_weights_1d


def test_staircase_levels():
    gt = ground_truth(SynthSpec(S=10, steps=4))
    assert np.unique(gt).tolist() == [0.0, 3.0, 6.0, 9.0]
    assert np.all(gt == gt[0])


def test_shapes_consistent():
    for pattern in ("staircase", "slant", "checker"):
        st, gt = generate(SynthSpec(H=32, W=48, S=6, depth_pattern=pattern, texture="checker"))
        assert st.data.shape == (6, 32, 48, 1) and gt.shape == (32, 48)
        assert gt.unit == "index" and gt.values.min() >= 0 and gt.values.max() <= 5


def test_deterministic():
    a, _ = generate(SynthSpec(H=32, W=32, S=4, seed=7))
    b, _ = generate(SynthSpec(H=32, W=32, S=4, seed=7))
    c, _ = generate(SynthSpec(H=32, W=32, S=4, seed=8))
    assert np.array_equal(a.data, b.data) and not np.array_equal(a.data, c.data)


def test_sharp_copy_at_gt():
    spec = SynthSpec(H=32, W=32, S=5, seed=2)
    st, gt = generate(spec)
    tex = texture(spec)
    for s in range(5):
        sel = gt.values == s
        assert np.array_equal(st.data[s, :, :, 0][sel], tex[sel])


def test_blur_matches_separable_oracle(rng):
    img = rng.random((9, 11))
    sigma = 1.3
    offs, w1 = gaussian_weights_1d(sigma)
    w1 = w1 / w1.sum()
    H, W = img.shape
    ref = np.zeros_like(img)
    for y in range(H):
        for x in range(W):
            ref[y, x] = sum(w1[i] * w1[j] * img[border_index(y + a, H, "replicate"), border_index(x + b, W, "replicate")]
                            for i, a in enumerate(offs) for j, b in enumerate(offs))
    assert np.allclose(gaussian_blur_direct(img, sigma), ref, atol=1e-13)
    assert np.array_equal(gaussian_blur_direct(img, 0), img)


def test_checker_period():
    assert CHECKER_PERIOD >= 2 * 4 + 2
    tex = texture(SynthSpec(H=20, W=20, texture="checker"))
    assert np.array_equal(tex[0, :CHECKER_PERIOD], [0] * 5 + [1] * 5)


@pytest.mark.parametrize("pattern", ["staircase", "checker"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_g1_peaks_at_gt_away_from_edges(pattern, seed):
    spec = SynthSpec(depth_pattern=pattern, seed=seed)
    st, gt = generate(spec)
    d = wta_depth(ddl_focus_volume(st, 1)).values
    keep = edge_distance_mask(gt.values, 2) & textured_mask(texture(spec))
    assert keep.sum() > 0
    assert np.array_equal(d[keep], gt.values[keep])


@pytest.mark.parametrize("tex", ["noise-texture", "checker"])
def test_strong_blur_keeps_gt_slice_sharpest(tex):
    spec = SynthSpec(S=4, blur_scale=6.0, texture=tex, seed=4)
    st, gt = generate(spec)
    E = np.stack([directional_energy(st.data[s, :, :, 0], ddl_bank(1)) for s in range(st.S)])
    g = gt.values.astype(int)
    at_gt = np.take_along_axis(E, g[None], 0)[0]
    others = np.where(np.arange(st.S)[:, None, None] == g[None], -np.inf, E).max(axis=0)
    m = textured_mask(texture(spec))
    assert ((others < at_gt) & m).sum() >= 0.99 * m.sum()


def test_edge_distance_mask():
    gt = np.zeros((5, 8))
    gt[:, 4:] = 1
    m = edge_distance_mask(gt, 2)
    assert m[:, :2].all() and not m[:, 2:6].any() and m[:, 6:].all()


@pytest.mark.parametrize("kw", [dict(S=1), dict(blur_scale=0), dict(depth_pattern="wave"),
                                dict(texture="stripes"), dict(steps=1), dict(H=0)])
def test_invalid_spec(kw):
    with pytest.raises(ValueError):
        SynthSpec(**kw)
