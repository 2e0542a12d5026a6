import math

import numpy as np
import pytest

from ddlsff import rng as drng
from ddlsff.noise import STUDY_PARAMS, NoiseSpec, apply_noise
from ddlsff.stackio import FocalStack
from oracles import philox_words


def _const_stack(value, S=1, H=64, W=64, C=1):
    return FocalStack(np.full((S, H, W, C), value), list(range(S)))


def test_raw_words_match_reference_philox():
    for seed, stream in [(0, 0), (7, 3), (2 ** 64 - 1, 1 << 32)]:
        assert drng.raw_words(seed, stream, 11).tolist() == philox_words(seed, stream, 11)


def test_uniform_mapping_and_range():
    words = np.array(philox_words(5, 2, 8), dtype=np.uint64)
    expect = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    u = drng.uniforms(5, 2, 8)
    assert np.array_equal(u, expect)
    big = drng.uniforms(1, 0, 100000)
    assert big.min() > 0 and big.max() < 1


def test_normals_box_muller():
    u = drng.uniforms(9, 4, 6)
    n = drng.normals(9, 4, 5)
    r = math.sqrt(-2 * math.log(u[0]))
    assert n[0] == pytest.approx(r * math.cos(2 * math.pi * u[1]), abs=0, rel=1e-15)
    assert n[1] == pytest.approx(r * math.sin(2 * math.pi * u[1]), abs=0, rel=1e-15)
    assert len(n) == 5
    z = drng.normals(3, 0, 200000)
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.02


def test_streams_differ():
    assert not np.array_equal(drng.uniforms(1, 0, 16), drng.uniforms(1, 1, 16))
    assert not np.array_equal(drng.uniforms(1, 0, 16), drng.uniforms(2, 0, 16))


def test_gaussian_variance():
    out = apply_noise(_const_stack(0.5), NoiseSpec("gaussian", STUDY_PARAMS["gaussian"], seed=3))
    v = np.var(out.data - 0.5)
    assert out.data.size >= 4096
    assert 0.8e-4 <= v <= 1.2e-4


def test_salt_pepper_fraction():
    out = apply_noise(_const_stack(0.5, H=256, W=256), NoiseSpec("salt_pepper", 0.005, seed=11))
    changed = out.data[0, :, :, 0] != 0.5
    assert 0.0035 <= changed.mean() <= 0.0065
    vals = out.data[0, :, :, 0][changed]
    assert set(np.unique(vals)) <= {0.0, 1.0}
    # polarity is a fair coin
    assert 0.3 < (vals == 1.0).mean() < 0.7


def test_salt_pepper_hits_whole_pixel():
    out = apply_noise(_const_stack(0.5, H=128, W=128, C=3), NoiseSpec("salt_pepper", 0.05, seed=1))
    d = out.data[0]
    hit = np.any(d != 0.5, axis=-1)
    assert np.all(d[hit] == d[hit][:, :1])


def test_speckle_on_zero_stays_zero():
    out = apply_noise(_const_stack(0.0), NoiseSpec("speckle", 0.005, seed=2))
    assert np.all(out.data == 0)


def test_output_clamped(rng):
    st = FocalStack(rng.random((3, 32, 32, 1)), [0, 1, 2])
    for kind, p in [("gaussian", 0.5), ("speckle", 4.0), ("salt_pepper", 0.3)]:
        d = apply_noise(st, NoiseSpec(kind, p, seed=4)).data
        assert d.min() >= 0 and d.max() <= 1


def test_reproducible_and_input_untouched(rng):
    st = FocalStack(rng.random((4, 16, 16, 3)), [1, 2, 3, 4])
    before = st.data.copy()
    spec = NoiseSpec("gaussian", 1e-3, seed=99)
    a, b = apply_noise(st, spec), apply_noise(st, spec)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(st.data, before)
    assert not np.array_equal(a.data, apply_noise(st, NoiseSpec("gaussian", 1e-3, seed=100)).data)


def test_thread_count_does_not_change_noise(rng, threads):
    st = FocalStack(rng.random((6, 16, 16, 1)), list(range(6)))
    spec = NoiseSpec("speckle", 0.01, seed=5)
    threads(1)
    a = apply_noise(st, spec).data
    threads(8)
    assert np.array_equal(a, apply_noise(st, spec).data)


def test_slice_streams_independent_of_stack_size(rng):
    st = FocalStack(rng.random((5, 8, 8, 1)), list(range(5)))
    sub = FocalStack(st.data[:2], [0, 1])
    spec = NoiseSpec("gaussian", 1e-2, seed=8)
    assert np.array_equal(apply_noise(st, spec).data[:2], apply_noise(sub, spec).data)


def test_tiny_variance_is_near_identity(rng):
    st = FocalStack(0.1 + 0.8 * rng.random((2, 32, 32, 1)), [0, 1])
    out = apply_noise(st, NoiseSpec("gaussian", 1e-12, seed=1))
    assert np.max(np.abs(out.data - st.data)) < 1e-5


@pytest.mark.parametrize("kind,param", [
    ("poisson", 0.1), ("gaussian", 0.0), ("gaussian", -1.0), ("speckle", float("nan")),
    ("salt_pepper", 1.0), ("salt_pepper", 1.5),
])
def test_invalid_specs(kind, param):
    with pytest.raises(ValueError):
        NoiseSpec(kind, param)
