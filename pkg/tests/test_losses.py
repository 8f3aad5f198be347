import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tsegan import autograd as ag
from tsegan.losses import (
    LossConfig,
    l1_penalty,
    metric_d_loss,
    metric_g_loss,
    mse_loss,
    si_snr_loss,
    wgan_d_loss,
    wgan_g_loss,
)
from tsegan.metrics import CAP_DB, q_metric

scores = hnp.arrays(np.float64, st.integers(1, 8), elements=st.floats(-5, 5))


def test_default_loss_weights():
    cfg = LossConfig()
    assert (cfg.lam, cfg.q_target, cfg.beta) == (200.0, 1.0, 100.0)


@pytest.mark.parametrize("kw", [dict(family="lsgan"), dict(lam=-1), dict(q_target=1.5), dict(beta=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LossConfig(**kw)


def test_wgan_d_examples():
    assert wgan_d_loss(np.array(0.7), np.array(0.7)).item() == 0.0
    assert wgan_d_loss(np.array(1.0), np.array(0.0)).item() == -1.0
    assert wgan_d_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0])).item() == 0.0


@settings(max_examples=50, deadline=None)
@given(scores, st.data())
def test_wgan_d_antisymmetry(dss, data):
    dgs = data.draw(hnp.arrays(np.float64, dss.shape, elements=st.floats(-5, 5)))
    assert wgan_d_loss(dss, dgs).item() == -wgan_d_loss(dgs, dss).item()


def test_wgan_g_examples():
    s = np.array([0.5, -0.2])
    assert wgan_g_loss(np.array(0.0), s, s, 200).item() == 0.0
    assert wgan_g_loss(np.array([0.3, 0.5]), np.zeros(2), np.ones(2), 0).item() == pytest.approx(-0.4)
    assert wgan_g_loss(np.array(0.0), np.array([1.0, -1.0]), np.zeros(2), 200).item() == 200.0


def test_metric_d_examples():
    assert metric_d_loss(np.array(0.3), np.array(-0.2), 0.3, -0.2).item() == 0.0
    assert metric_d_loss(np.array(0.0), np.array(0.0), 1.0, 0.0).item() == 1.0


def test_metric_d_gradient_wrt_dgs():
    dss = ag.parameter(np.array([0.1, 0.4, -0.3]))
    dgs = ag.parameter(np.array([0.2, -0.5, 0.9]))
    qgs = np.array([0.0, 0.1, 0.2])
    metric_d_loss(dss, dgs, 0.8, qgs).backward()
    np.testing.assert_allclose(dgs.grad, 2 * (dgs.data - qgs) / 3, atol=1e-15)
    errs = ag.gradcheck(lambda: metric_d_loss(dss, dgs, 0.8, qgs), [dss, dgs])
    assert max(errs) < 1e-8


def test_metric_g_examples():
    s = np.array([0.1, 0.2, 0.3])
    assert metric_g_loss(np.array(1.0), s, s, q=1.0).item() == 0.0
    assert metric_g_loss(np.array(0.0), np.zeros(3), s, q=1.0, lam=0).item() == 1.0
    assert metric_g_loss(np.array(0.5), s, s, q=1.0, lam=200).item() == 0.25


@settings(max_examples=50, deadline=None)
@given(scores, st.floats(-1, 1), st.floats(0, 500), st.integers(0, 2**31 - 1))
def test_metric_losses_nonnegative(d, q, lam, seed):
    rng = np.random.default_rng(seed)
    gx, s = rng.standard_normal(16), rng.standard_normal(16)
    assert metric_d_loss(d, d[::-1], q, -q).item() >= 0
    assert metric_g_loss(d, gx, s, q, lam).item() >= 0


def test_shape_mismatch_rejected():
    for fn in (lambda: l1_penalty(np.ones(3), np.ones(4)),
               lambda: wgan_g_loss(np.array(0.0), np.ones(3), np.ones(4), 0.0),
               lambda: metric_g_loss(np.array(0.0), np.ones(3), np.ones(4), 1.0, 0.0),
               lambda: mse_loss(np.ones(3), np.ones(4)),
               lambda: si_snr_loss(np.ones(3), np.ones(4))):
        with pytest.raises(ValueError):
            fn()


def test_baseline_loss_examples():
    s = np.random.default_rng(0).standard_normal(32)
    assert mse_loss(s, s).item() == 0.0
    assert mse_loss(np.ones(2), np.zeros(2)).item() == 1.0
    assert si_snr_loss(s, s).item() == -CAP_DB


def test_q_targets_carry_no_gradient():
    # Q is computed on plain arrays from a tensor; the loss must not route gradient into it
    gx = ag.parameter(np.random.default_rng(1).standard_normal((2, 40)))
    s = np.random.default_rng(2).standard_normal((2, 40))
    q = np.array([q_metric(g, r).value for g, r in zip(gx.data, s)])
    d = ag.parameter(np.array([0.2, -0.1]))
    metric_d_loss(d, d, q, q).backward()
    assert gx.grad is None


def test_scale_problem_mitigation():
    rng = np.random.default_rng(3)
    s = rng.standard_normal(100)
    gx0 = s + 0.3 * rng.standard_normal(100)

    def grad(loss_fn, c):
        x = ag.parameter(c * gx0)
        loss_fn(x).backward()
        return x.grad

    metric = lambda x: metric_g_loss(np.array(0.4), x, s, 1.0, 200.0)
    assert not np.allclose(grad(metric, 1.0), grad(metric, 3.0))

    g1, g3 = grad(lambda x: si_snr_loss(x, s), 1.0), grad(lambda x: si_snr_loss(x, s), 3.0)
    cos = np.dot(g1, g3) / (np.linalg.norm(g1) * np.linalg.norm(g3))
    assert cos == pytest.approx(1.0, abs=1e-12)
