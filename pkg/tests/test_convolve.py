import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ddlsff.convolve import conv2d, directional_energy
from ddlsff.kernels import ANGLES, Kernel2D, ddl_bank, ddl_kernel, standard_laplacian
from oracles import naive_conv2d

ALL_KERNELS = [standard_laplacian()] + [ddl_kernel(r, t) for r in (1, 2, 3, 4) for t in ANGLES]


@pytest.mark.parametrize("border", ["replicate", "reflect", "zero"])
@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=lambda k: f"r{k.dilation}-{k.orientation}")
def test_bit_identical_to_naive(kernel, border, backend, rng):
    img = rng.random((13, 17))
    out = conv2d(img, kernel, border, backend=backend)
    assert np.array_equal(out, naive_conv2d(img, kernel.taps, border))


def test_general_integer_kernel_matches_naive(backend, rng):
    k = Kernel2D(rng.integers(-5, 6, size=(5, 5)))
    img = rng.random((9, 11))
    assert np.array_equal(conv2d(img, k, backend=backend), naive_conv2d(img, k.taps))


def test_constant_image_gives_zero():
    img = np.full((9, 9), 0.7)
    for k in ALL_KERNELS:
        for border in ("replicate", "reflect"):
            assert np.all(conv2d(img, k, border) == 0.0)


def test_impulse_response_is_flipped_kernel():
    img = np.zeros((7, 7))
    img[3, 3] = 1.0
    out = conv2d(img, standard_laplacian(), "zero")
    expected = np.zeros((7, 7))
    expected[3, 3] = -4
    expected[2, 3] = expected[4, 3] = expected[3, 2] = expected[3, 4] = 1
    assert np.array_equal(out, expected)


def test_ramp_replicate_border_values():
    # frozen from naive_conv2d on a 5x5 ramp img(x, y) = x
    ramp = np.tile(np.arange(5.0), (5, 1))
    out = conv2d(ramp, ddl_kernel(1, 0), "replicate")
    assert np.array_equal(out, np.tile([1.0, 0.0, 0.0, 0.0, -1.0], (5, 1)))


def test_kernel_larger_than_image_rejected():
    with pytest.raises(ValueError):
        conv2d(np.zeros((4, 4)), ddl_kernel(3, 0))


def test_multichannel_rejected():
    with pytest.raises(ValueError):
        conv2d(np.zeros((4, 4, 3)), ddl_kernel(1, 0))


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3),
       f=arrays(np.float64, (10, 11), elements=st.floats(-1, 1)),
       g=arrays(np.float64, (10, 11), elements=st.floats(-1, 1)),
       idx=st.integers(0, len(ALL_KERNELS) - 1))
def test_linearity(a, b, f, g, idx):
    k = ALL_KERNELS[idx]
    lhs = conv2d(a * f + b * g, k)
    rhs = a * conv2d(f, k) + b * conv2d(g, k)
    scale = max(1.0, float(np.abs(lhs).max()))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_threads_do_not_change_results(threads, rng, backend):
    img = rng.random((64, 48))
    threads(1)
    one = conv2d(img, ddl_kernel(3, 45), backend=backend)
    e1 = directional_energy(img, ddl_bank(2), backend=backend)
    threads(8)
    assert np.array_equal(one, conv2d(img, ddl_kernel(3, 45), backend=backend))
    assert np.array_equal(e1, directional_energy(img, ddl_bank(2), backend=backend))


def test_backends_agree_on_energy(rng):
    pytest.importorskip("ddlsff._ckernels")
    img = rng.random((31, 29))
    for r in (1, 2, 3, 4):
        assert np.array_equal(directional_energy(img, ddl_bank(r), backend="python"),
                              directional_energy(img, ddl_bank(r), backend="cython"))


def test_directional_energy_matches_naive_sum(rng):
    img = rng.random((12, 12))
    expected = np.zeros_like(img)
    for k in ddl_bank(2):
        expected += naive_conv2d(img, k.taps) ** 2
    assert np.array_equal(directional_energy(img, ddl_bank(2)), expected)
