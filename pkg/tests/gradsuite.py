"""Randomized finite-difference checks for every differentiable op and both networks.

Each case builder takes an rng and returns ``(fn, inputs)``: ``fn()`` rebuilds a
scalar from the current input values so central differences can be taken.
Non-scalar op outputs are contracted with a fixed random tensor.
"""
from __future__ import annotations

import time

import numpy as np

from tsegan import autograd as ag
from tsegan.autograd import gradcheck
from tsegan.discriminator import Discriminator, DiscriminatorConfig
from tsegan.generator import Generator, GeneratorConfig
from tsegan.losses import l1_penalty, metric_d_loss
from tsegan.metrics import q_metric_t, si_snr_t, snr_t

TOL = 1e-4
H = 1e-5


def _t(rng, *shape, lo=None):
    x = rng.standard_normal(shape)
    if lo is not None:  # keep away from kinks so central differences stay valid
        x = np.where(np.abs(x) < lo, np.sign(x + 1e-300) * lo + x, x)
    return ag.parameter(x)


def _contract(out, rng):
    r = rng.standard_normal(out.shape)
    return lambda t: ag.tsum(ag.mul(t, r))


def _unary(op, lo=None, positive=False):
    def build(rng):
        shape = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
        x = ag.parameter(rng.uniform(0.2, 3.0, shape)) if positive else _t(rng, *shape, lo=lo)
        proj = _contract(op(x), rng)
        return (lambda: proj(op(x))), [x]
    return build


def _binary(op, positive_b=False):
    def build(rng):
        shape = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
        bshape = shape[rng.integers(0, len(shape)):] if rng.random() < 0.5 else shape  # broadcast sometimes
        a = _t(rng, *shape)
        b = ag.parameter(rng.uniform(0.5, 2.0, bshape) * rng.choice([-1, 1], bshape)) if positive_b else _t(rng, *bshape)
        proj = _contract(op(a, b), rng)
        return (lambda: proj(op(a, b))), [a, b]
    return build


def _matmul(rng):
    m, k, n = rng.integers(1, 6, 3)
    lead = tuple(rng.integers(1, 4, size=rng.integers(0, 2)))
    a, b = _t(rng, *lead, m, k), _t(rng, k, n)
    proj = _contract(ag.matmul(a, b), rng)
    return (lambda: proj(ag.matmul(a, b))), [a, b]


def _reduction(op):
    def build(rng):
        shape = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
        axis = None if rng.random() < 0.3 else int(rng.integers(-len(shape), len(shape)))
        keep = bool(rng.random() < 0.5)
        x = _t(rng, *shape)
        proj = _contract(op(x, axis=axis, keepdims=keep), rng)
        return (lambda: proj(op(x, axis=axis, keepdims=keep))), [x]
    return build


def _shape_ops(rng):
    x = _t(rng, 2, 3, 4)
    perm = tuple(rng.permutation(3))

    def f(x):
        y = ag.transpose(ag.reshape(x, (6, 4)), (1, 0))
        y = ag.getitem(y, (slice(1, 4), np.array([0, 2, 2, 5])))
        z = ag.concat([y, ag.scale(y, 2.0)], axis=0)
        z = ag.stack([z, z], axis=1)
        return ag.add(ag.tsum(ag.mul(z, z)), ag.tsum(ag.mul(ag.transpose(x, perm), ag.pad_last(ag.transpose(x, perm), 0, 0))))

    return (lambda: f(x)), [x]


def _pad(rng):
    x = _t(rng, 2, int(rng.integers(1, 6)))
    left, right = (int(v) for v in rng.integers(0, 3, 2))
    proj = _contract(ag.pad_last(x, left, right), rng)
    return (lambda: proj(ag.pad_last(x, left, right))), [x]


def _prelu(rng):
    x = _t(rng, *rng.integers(1, 5, 2), lo=1e-3)
    a = ag.parameter(np.array([rng.uniform(-0.5, 0.5)]))
    proj = _contract(ag.prelu(x, a), rng)
    return (lambda: proj(ag.prelu(x, a))), [x, a]


def _clip(rng):
    x = ag.parameter(rng.choice([-1, 1], 12) * rng.uniform(0.1, 0.9, 12) + rng.choice([0.0, 2.0], 12))
    proj = _contract(ag.clip(x, -1.0, 1.0), rng)
    return (lambda: proj(ag.clip(x, -1.0, 1.0))), [x]


def _norms(rng):
    x = _t(rng, *rng.integers(1, 5, 2), lo=1e-3)
    return (lambda: ag.add(ag.l1_norm(x), ag.scale(ag.l2_norm_sq(x), 0.3))), [x]


def _gln(rng):
    shape = (int(rng.integers(2, 5)), int(rng.integers(2, 7)))
    if rng.random() < 0.5:
        shape = (2,) + shape
    x = _t(rng, *shape)
    g = ag.parameter(rng.uniform(0.5, 1.5, shape[-2]))
    b = _t(rng, shape[-2])
    proj = _contract(ag.global_layer_norm(x, g, b), rng)
    return (lambda: proj(ag.global_layer_norm(x, g, b))), [x, g, b]


def _conv1d(rng):
    cin, cout, k = (int(v) for v in rng.integers(1, 4, 3))
    stride, dil = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    pad = int(rng.integers(0, 3))
    T = int(rng.integers(dil * (k - 1) + 1, 12))
    batched = rng.random() < 0.5
    x = _t(rng, *((2,) if batched else ()), cin, T)
    w, b = _t(rng, cout, cin, k), _t(rng, cout)

    def f():
        return ag.conv1d(x, w, stride=stride, dilation=dil, padding=pad, bias=b)

    proj = _contract(f(), rng)
    return (lambda: proj(f())), [x, w, b]


def _conv1d_depthwise(rng):
    c, k = int(rng.integers(1, 4)), int(rng.choice([1, 3, 5]))
    dil = int(rng.integers(1, 4))
    pad = dil * (k - 1) // 2
    x, w, b = _t(rng, 2, c, int(rng.integers(4, 10))), _t(rng, c, 1, k), _t(rng, c)

    def f():
        return ag.conv1d(x, w, dilation=dil, padding=pad, groups=c, bias=b)

    proj = _contract(f(), rng)
    return (lambda: proj(f())), [x, w, b]


def _conv_transpose1d(rng):
    cin, cout = (int(v) for v in rng.integers(1, 4, 2))
    stride = int(rng.integers(1, 4))
    k = int(rng.integers(stride, stride + 3))
    x, w = _t(rng, *((2,) if rng.random() < 0.5 else ()), cin, int(rng.integers(1, 6))), _t(rng, cin, cout, k)
    proj = _contract(ag.conv_transpose1d(x, w, stride), rng)
    return (lambda: proj(ag.conv_transpose1d(x, w, stride))), [x, w]


def _conv2d(rng):
    cin, cout = (int(v) for v in rng.integers(1, 3, 2))
    k = int(rng.choice([1, 3, 5]))
    stride, pad = int(rng.integers(1, 3)), k // 2
    hw = (int(rng.integers(k, 8)), int(rng.integers(k, 8)))
    x, w, b = _t(rng, 2, cin, *hw), _t(rng, cout, cin, k, k), _t(rng, cout)

    def f():
        return ag.conv2d(x, w, stride=stride, padding=pad, bias=b)

    proj = _contract(f(), rng)
    return (lambda: proj(f())), [x, w, b]


def _pool(rng):
    h, w = (int(v) for v in rng.integers(1, 9, 2))
    x = _t(rng, 2, 2, h, w)
    out = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    proj = _contract(ag.adaptive_avg_pool2d(x, out), rng)
    return (lambda: proj(ag.adaptive_avg_pool2d(x, out))), [x]


def _spectral(rng):
    rows, cols = (int(v) for v in rng.integers(2, 6, 2))
    w = _t(rng, rows, cols)
    state = ag.SpectralNormState(rows, cols, rng)
    state.power_iterate(w.data, 5)
    proj = _contract(w, rng)
    # iters=0: the vectors stay fixed so the function is well defined under perturbation
    return (lambda: proj(ag.spectral_normalize(w, state, 0))), [w]


def _metric(fn):
    def build(rng):
        T = int(rng.integers(8, 40))
        s = rng.standard_normal((2, T))
        est = ag.parameter(s + rng.uniform(0.2, 1.5) * rng.standard_normal((2, T)))
        ref = ag.parameter(s)
        return (lambda: ag.tsum(fn(est, ref))), [est, ref]
    return build


def _tiny_generator(rng, seed):
    cfg = GeneratorConfig(n_filters=4, window=4, bottleneck=3, hidden=4, kernel=3, blocks=1, repeats=1)
    return Generator(cfg, seed=seed)


def _generator_case(rng):
    g = _tiny_generator(rng, int(rng.integers(1 << 30)))
    x = rng.standard_normal(64)
    s = x + 0.3 * rng.standard_normal(64)
    return (lambda: l1_penalty(g(x), s)), g.parameters()


def _discriminator_case(rng):
    g = _tiny_generator(rng, int(rng.integers(1 << 30)))
    cfg = DiscriminatorConfig(channels=(2, 2, 2, 2), kernels=(3, 3, 3, 3), fc=(4,), pool=(2, 2))
    d = Discriminator(g, cfg, seed=int(rng.integers(1 << 30)))
    for layer in d.layers():
        # zero biases put pre-activations on the leaky-ReLU kink
        n = layer.bias.size
        layer.bias.data[:] = rng.choice([-1, 1], n) * rng.uniform(0.05, 0.3, n)
    s = rng.standard_normal((2, 32))
    gx = s + 0.5 * rng.standard_normal((2, 32))
    q = np.tanh(rng.uniform(-0.5, 0.5, (2, 2)))

    def f():
        return metric_d_loss(d(s, s), d(gx, s), q[0], q[1])

    return f, d.parameters()


CASES = {
    "add": _binary(ag.add),
    "sub": _binary(ag.sub),
    "mul": _binary(ag.mul),
    "div": _binary(ag.div, positive_b=True),
    "neg": _unary(ag.neg),
    "scale": _unary(lambda x: ag.scale(x, -1.7)),
    "power": _unary(lambda x: ag.power(x, 1.5), positive=True),
    "exp": _unary(ag.exp),
    "log": _unary(ag.log, positive=True),
    "log10": _unary(ag.log10, positive=True),
    "sqrt": _unary(ag.sqrt, positive=True),
    "abs": _unary(ag.tabs, lo=1e-3),
    "relu": _unary(ag.relu, lo=1e-3),
    "leaky_relu": _unary(lambda x: ag.leaky_relu(x, 0.2), lo=1e-3),
    "sigmoid": _unary(ag.sigmoid),
    "tanh": _unary(ag.tanh),
    "prelu": _prelu,
    "clip": _clip,
    "l1_l2_norms": _norms,
    "matmul": _matmul,
    "sum": _reduction(ag.tsum),
    "mean": _reduction(ag.mean),
    "shape_ops": _shape_ops,
    "pad_last": _pad,
    "global_layer_norm": _gln,
    "conv1d": _conv1d,
    "conv1d_depthwise": _conv1d_depthwise,
    "conv_transpose1d": _conv_transpose1d,
    "conv2d": _conv2d,
    "adaptive_avg_pool2d": _pool,
    "spectral_normalize": _spectral,
    "si_snr_t": _metric(si_snr_t),
    "snr_t": _metric(snr_t),
    "q_metric_t": _metric(lambda e, r: q_metric_t(e, r, beta=10.0)),
    "generator_l1": _generator_case,
    "discriminator_metric": _discriminator_case,
}


def check_case(name: str, n_instances: int = 20, seed: int = 0) -> float:
    """Worst relative error over ``n_instances`` random instances of one case."""
    rng = np.random.default_rng([seed, sum(map(ord, name))])
    worst = 0.0
    for _ in range(n_instances):
        fn, inputs = CASES[name](rng)
        worst = max(worst, *gradcheck(fn, inputs, H))
    return worst


def run_suite(n_instances: int = 20, seed: int = 0) -> tuple[dict[str, float], float]:
    t0 = time.perf_counter()
    errors = {name: check_case(name, n_instances, seed) for name in CASES}
    return errors, time.perf_counter() - t0
