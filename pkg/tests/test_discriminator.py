import numpy as np
import pytest

import gradsuite
from tsegan import autograd as ag
from tsegan.autograd import Adam
from tsegan.discriminator import Discriminator, DiscriminatorConfig
from tsegan.generator import Generator, GeneratorConfig

GCFG = GeneratorConfig(n_filters=16, window=8, bottleneck=4, hidden=8, blocks=2, repeats=1)


@pytest.fixture(scope="module")
def pair():
    g = Generator(GCFG, seed=0)
    return g, Discriminator(g, seed=1)


def test_default_architecture(pair):
    _, d = pair
    shapes = [layer.weight.shape for layer in d.layers()]
    assert [s[2] for s in shapes[:4]] == [5, 7, 9, 11]
    assert [s[0] for s in shapes[:4]] == [8, 16, 32, 64]
    assert shapes[4:] == [(256, 1024), (64, 256), (1, 64)]


def test_encoder_is_shared_not_copied(pair):
    g, d = pair
    assert d.generator is g
    assert all(p is not g.encoder for p in d.parameters())


def test_featurize_identical_channels(pair):
    _, d = pair
    x = np.random.default_rng(0).standard_normal(400)
    f = d.featurize(x, x).data
    assert f.shape == (2, 16, (400 - 8) // 4 + 1)
    np.testing.assert_array_equal(f[0], f[1])


def test_featurize_shape_default_width():
    g = Generator(GeneratorConfig(), seed=0)
    d = Discriminator(g)
    assert d.featurize(np.ones(8000), np.ones(8000)).shape == (2, 64, 999)


def test_featurize_length_mismatch(pair):
    _, d = pair
    with pytest.raises(ValueError, match="length"):
        d.featurize(np.ones(100), np.ones(101))


def test_swapping_inputs_swaps_channels_and_changes_score(pair):
    _, d = pair
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(400), rng.standard_normal(400)
    fab, fba = d.featurize(a, b).data, d.featurize(b, a).data
    np.testing.assert_array_equal(fab[0], fba[1])
    assert d(a, b).item() != d(b, a).item()


def test_metric_mode_range(pair):
    _, d = pair
    rng = np.random.default_rng(2)
    cand = rng.standard_normal((100, 200)) * rng.uniform(0.01, 100, (100, 1))
    ref = rng.standard_normal((100, 200))
    with ag.no_grad():
        scores = d(cand, ref).data
    assert scores.shape == (100,)
    assert (np.abs(scores) < 1).all()


def test_wasserstein_mode_is_unbounded_head(pair):
    _, d = pair
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(200), rng.standard_normal(200)
    raw = d(a, b, mode="wasserstein").item()
    assert d(a, b, mode="metric").item() == pytest.approx(np.tanh(raw), abs=1e-15)
    with pytest.raises(ValueError):
        d(a, b, mode="lsgan")


def test_zero_head_scores_zero():
    g = Generator(GCFG)
    d = Discriminator(g, DiscriminatorConfig(zero_head=True))
    assert d(np.ones(100), np.arange(100.0)).item() == 0.0


def test_spectral_sigmas_at_init(pair):
    _, d = pair
    assert all(0.99 <= s <= 1.001 for s in d.normalized_sigmas())


@pytest.mark.parametrize("frozen", [True, False])
def test_encoder_gradient_presence(frozen):
    g = Generator(GCFG, seed=4)
    d = Discriminator(g, seed=5)
    rng = np.random.default_rng(4)
    s = rng.standard_normal(200)
    x = s + rng.standard_normal(200)
    g.zero_grad()
    d(x, s, encoder_frozen=frozen).backward()
    enc_grad = g.encoder.grad
    if frozen:
        assert enc_grad is None or not enc_grad.any()
    else:
        assert enc_grad is not None and np.abs(enc_grad).max() > 0


def test_discriminator_step_leaves_encoder_bit_identical():
    g = Generator(GCFG, seed=6)
    d = Discriminator(g, seed=7)
    opt = Adam(d.parameters(), lr=1e-2)
    before = g.encoder.data.copy()
    rng = np.random.default_rng(5)
    s = rng.standard_normal((2, 200))
    gx = s + rng.standard_normal((2, 200))
    loss = ag.mean(ag.mul(ag.sub(d(gx, s), 0.3), ag.sub(d(gx, s), 0.3)))
    loss.backward()
    opt.step()
    assert np.array_equal(g.encoder.data, before)
    assert g.encoder.grad is None or not g.encoder.grad.any()


def test_power_iteration_tracks_updates():
    g = Generator(GCFG, seed=8)
    d = Discriminator(g, seed=9)
    for layer in d.layers():
        layer.weight.data *= 1.0 + 0.01 * np.random.default_rng(0).standard_normal(layer.weight.shape)
    d.power_iteration(10)
    assert all(0.99 <= s <= 1.001 for s in d.normalized_sigmas())


def test_discriminator_gradients_finite_difference():
    assert gradsuite.check_case("discriminator_metric", n_instances=2) < gradsuite.TOL
