import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqbar.compiler import GAUSSIAN_3X3, Kernel, compile_kernel
from freqbar.crossbar import CrossbarConfig
from freqbar.device import TABLE_I, ConductanceTable, NoiseModel
from freqbar.errors import DecodeError, FormatError, PipelineError
from freqbar.pipeline import (
    Activation,
    ConvolutionJob,
    Image,
    Mode,
    OutputScale,
    add_noise,
    apply_activation,
    convolve,
    convolve_detailed,
    convolve_per_mac,
    crossing_scene,
    decode_pnm,
    encode_pnm,
    output_shape,
    reference_convolve,
)


def rand_image(seed, h=16, w=16, c=1):
    return Image(np.random.default_rng(seed).integers(0, 256, size=(h, w, c), dtype=np.uint8))


def test_noise_identity():
    img = rand_image(0)
    assert add_noise(img, 0.0, seed=9) == img


def test_noise_statistics():
    out = add_noise(Image(np.zeros((400, 400, 1), np.uint8)), 1.0, seed=4)
    assert abs(out.pixels.mean() - 127.5) <= 1.0
    assert out.pixels.max() == 255


def test_noise_deterministic():
    img = crossing_scene(32, 32)
    a, b = add_noise(img, 0.5, seed=11), add_noise(img, 0.5, seed=11)
    assert encode_pnm(a) == encode_pnm(b)
    assert add_noise(img, 0.5, seed=12) != a


def test_noise_alpha_range():
    with pytest.raises(PipelineError):
        add_noise(rand_image(0), 1.5)


def test_paper_dimensions(gaussian):
    img = add_noise(crossing_scene(128, 128), 0.5, seed=0)
    res = convolve_detailed(ConvolutionJob(img, gaussian))
    assert res.image.pixels.shape == (126, 126, 3)
    assert res.macs_per_channel == 15_876
    assert res.macs_per_channel * img.channels == 47_628


def test_flat_field(gaussian):
    img = Image(np.full((8, 8), 255, np.uint8))
    out = convolve(ConvolutionJob(img, gaussian))
    assert (out.pixels == 255).all()


def test_kernel_pattern_patch(gaussian):
    img = Image((np.array(GAUSSIAN_3X3.weights) * 10).astype(np.uint8))
    res = convolve_detailed(ConvolutionJob(img, gaussian))
    assert res.dots[0, 0, 0] == 360
    assert res.image.pixels[0, 0, 0] == 23


def test_raw_output_scale(table):
    p = compile_kernel(Kernel(((1,),)), table)
    img = rand_image(2, 5, 5)
    out = convolve(ConvolutionJob(img, p, output_scale=OutputScale.RAW))
    assert out == img


def test_reference_identity_and_zero():
    img = rand_image(3)
    assert reference_convolve(img, Kernel(((1,),))) == img
    zero = Image(np.zeros((6, 6), np.uint8))
    assert (reference_convolve(zero, GAUSSIAN_3X3).pixels == 0).all()


def test_kernel_larger_than_image(gaussian):
    with pytest.raises(PipelineError):
        convolve(ConvolutionJob(Image(np.zeros((2, 5), np.uint8)), gaussian))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_dimension_law(h, w, kr, kc, stride):
    if kr > h or kc > w:
        with pytest.raises(PipelineError):
            output_shape(h, w, kr, kc, stride)
        return
    ho, wo = output_shape(h, w, kr, kc, stride)
    assert (ho, wo) == (len(range(0, h - kr + 1, stride)), len(range(0, w - kc + 1, stride)))


def test_strided_matches_reference(gaussian):
    img = rand_image(5, 17, 13, 3)
    job = ConvolutionJob(img, gaussian, stride=2)
    assert convolve(job) == reference_convolve(img, GAUSSIAN_3X3, stride=2)


@pytest.mark.parametrize("seed", range(5))
def test_batched_equals_per_mac_analytic(gaussian, seed):
    img = rand_image(seed, 7, 6, 3)
    for cfg in (CrossbarConfig(), CrossbarConfig(noise=NoiseModel(0.02, seed), line_resistance=0.5)):
        job = ConvolutionJob(img, gaussian, config=cfg)
        assert convolve(job) == convolve_per_mac(job)


def test_batched_equals_per_mac_simulated(gaussian):
    img = rand_image(1, 5, 5)
    job = ConvolutionJob(img, gaussian, mode=Mode.SIMULATED)
    assert convolve(job) == convolve_per_mac(job)


def test_simulated_close_to_oracle(gaussian):
    img = rand_image(7, 10, 10)
    out = convolve(ConvolutionJob(img, gaussian, mode=Mode.SIMULATED))
    ref = reference_convolve(img, GAUSSIAN_3X3)
    assert np.abs(out.pixels.astype(int) - ref.pixels).max() <= 1


def test_noise_keyed_by_coordinate(gaussian):
    img = rand_image(8, 12, 12)
    cfg = CrossbarConfig(noise=NoiseModel(0.05, 3))
    full = convolve_detailed(ConvolutionJob(img, gaussian, config=cfg))
    row = convolve_detailed(ConvolutionJob(img, gaussian, config=cfg), rows=[4])
    np.testing.assert_array_equal(full.currents[4], row.currents[0])


def test_decode_error_carries_coordinates(gaussian):
    img = Image(np.zeros((4, 4), np.uint8))
    job = ConvolutionJob(img, gaussian, config=CrossbarConfig(line_resistance=1000.0))
    with pytest.raises(DecodeError, match=r"row=0, col=0, channel=0"):
        convolve(job)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 255), st.sampled_from([((1, 2, 1), (2, 4, 2), (1, 2, 1)), ((1, 1), (1, 1)), ((2, 3, 3),)]))
def test_flat_field_any_normalised_kernel(value, weights):
    k = Kernel(weights, scale_den=sum(map(sum, weights)))
    p = compile_kernel(k, ConductanceTable(TABLE_I))
    img = Image(np.full((6, 6), value, np.uint8))
    assert (convolve(ConvolutionJob(img, p)).pixels == value).all()


def test_activation():
    assert apply_activation([0.0], Activation.SIGMOID)[0] == 0.5
    hi, lo = apply_activation([36.8, -36.8], Activation.SIGMOID)
    assert abs(hi - 1.0) <= 1e-15 and abs(lo) <= 1e-15
    v = np.array([-3.0, 0.2, 7.0])
    np.testing.assert_array_equal(apply_activation(v, Activation.NONE), v)
    np.testing.assert_allclose(apply_activation(v, "sigmoid"), 1 / (1 + np.exp(-v)), rtol=1e-15)


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_round_trip(channels):
    img = rand_image(4, 9, 11, channels)
    data = encode_pnm(img)
    assert data.startswith(b"P5" if channels == 1 else b"P6")
    back = decode_pnm(data)
    assert back == img
    assert encode_pnm(back) == data


def test_pnm_comments_and_errors():
    img = decode_pnm(b"P5\n# hello\n2 1\n255\n\x01\x02")
    assert img.pixels.ravel().tolist() == [1, 2]
    with pytest.raises(FormatError):
        decode_pnm(b"P2\n2 1\n255\n1 2")
    with pytest.raises(FormatError):
        decode_pnm(b"P5\n2 2\n255\n\x01")
    with pytest.raises(FormatError):
        decode_pnm(b"P5\n1 1\n65535\n\x00\x00")
