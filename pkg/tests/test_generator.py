import numpy as np
import pytest

import gradsuite
from tsegan import autograd as ag
from tsegan.generator import Generator, GeneratorConfig
from tsegan.metrics import AudioSignal

TINY = GeneratorConfig(n_filters=8, window=8, bottleneck=4, hidden=8, kernel=3, blocks=3, repeats=1)


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(window=15)
    with pytest.raises(ValueError):
        GeneratorConfig(kernel=4)
    with pytest.raises(ValueError):
        GeneratorConfig(norm="batch")


def test_window_for_16k_is_32_samples():
    cfg = GeneratorConfig.for_rate(16000)
    assert (cfg.window, cfg.stride) == (32, 16)
    assert GeneratorConfig.for_rate(8000).window == 16


def test_encode_exactly_one_window():
    g = Generator(TINY)
    assert g.encode(np.ones(8)).shape == (8, 1)


@pytest.mark.parametrize("T", [8, 9, 100, 1001])
def test_frame_count_formula(T):
    g = Generator(TINY)
    assert g.encode(np.random.default_rng(T).standard_normal(T)).shape[-1] == (T - 8) // 4 + 1


def test_encode_zero_signal_is_zero_and_nonnegative():
    g = Generator(TINY)
    assert not g.encode(np.zeros(64)).data.any()
    assert (g.encode(np.random.default_rng(0).standard_normal(64)).data >= 0).all()


def test_encode_rejects_short_input():
    with pytest.raises(ValueError, match="shorter"):
        Generator(TINY).encode(np.ones(7))


def test_mask_in_open_unit_interval():
    g = Generator(TINY, seed=3)
    for seed in range(5):
        m = g.mask(g.encode(np.random.default_rng(seed).standard_normal(200) * 10)).data
        assert ((m > 0) & (m < 1)).all()


def test_zero_head_gives_half_mask():
    g = Generator(TINY, zero_head=True)
    m = g.mask(g.encode(np.random.default_rng(1).standard_normal(100))).data
    np.testing.assert_array_equal(m, 0.5)


def test_receptive_field_perturbation():
    # global layer norm couples every frame, so the locality check uses the un-normalized stack
    cfg = GeneratorConfig(n_filters=4, window=4, bottleneck=3, hidden=4, kernel=3, blocks=3, repeats=2, norm="none")
    g = Generator(cfg, seed=2)
    half = (cfg.receptive_field() - 1) // 2
    assert cfg.receptive_field() == 1 + 2 * 2 * 7
    rng = np.random.default_rng(0)
    latent = rng.uniform(0, 1, (4, 80))
    j = 40
    base = g.mask(ag.as_tensor(latent)).data
    bumped = latent.copy()
    bumped[:, j] += 1.0
    diff = np.abs(g.mask(ag.as_tensor(bumped)).data - base).max(axis=0)
    far = np.abs(np.arange(80) - j) > half
    assert (diff[far] == 0).all()
    assert diff[j - half] > 0 and diff[j + half] > 0  # the bound is tight


def test_forced_unit_mask_is_encoder_decoder_passthrough():
    g = Generator(TINY, seed=4)
    x = np.random.default_rng(2).standard_normal(64)
    g._mask_override = 1.0
    expected = g.decode(g.encode(x)).data
    np.testing.assert_allclose(g(x).data, expected, atol=1e-14)


def test_forced_zero_mask_silences_output():
    g = Generator(TINY)
    g._mask_override = 0.0
    assert not g(np.random.default_rng(3).standard_normal(50)).data.any()


@pytest.mark.parametrize("T", [8, 9, 1000, 8000])
def test_output_length_matches_input(T):
    g = Generator(TINY)
    out = g.enhance(AudioSignal(np.random.default_rng(T).standard_normal(T), 8000))
    assert len(out) == T and out.sample_rate == 8000


def test_padded_length_arithmetic():
    g = Generator(TINY)
    for T in range(8, 60):
        Tp = g.padded_length(T)
        assert Tp >= T and (Tp - 8) % 4 == 0 and Tp - T < 4


def test_batch_matches_single():
    g = Generator(TINY, seed=5)
    x = np.random.default_rng(4).standard_normal((3, 77))
    batched = g.enhance_batch(x, chunk=2)
    for i in range(3):
        np.testing.assert_allclose(batched[i], g(x[i]).data, atol=1e-12)


def test_determinism_under_seed():
    x = np.random.default_rng(5).standard_normal(123)
    a = Generator(TINY, seed=9)(x).data
    b = Generator(TINY, seed=9)(x).data
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, Generator(TINY, seed=10)(x).data)


def test_parameter_inventory():
    g = Generator(TINY)
    names = dict(g.named_parameters())
    assert names["encoder"].shape == (8, 1, 8) and names["decoder"].shape == (8, 1, 8)
    assert names["w_head"].shape[0] == TINY.n_filters
    assert len(g.blocks) == 3


def test_generator_gradients_finite_difference():
    assert gradsuite.check_case("generator_l1", n_instances=3) < gradsuite.TOL


def test_mean_output_gradient_single_block():
    # tiny configuration with N=4 and a single TCN block
    cfg = GeneratorConfig(n_filters=4, window=4, bottleneck=3, hidden=4, blocks=1, repeats=1)
    g = Generator(cfg, seed=11)
    x = np.random.default_rng(6).standard_normal(64)
    errs = ag.gradcheck(lambda: ag.mean(g(x)), g.parameters())
    assert max(errs) < 1e-4
