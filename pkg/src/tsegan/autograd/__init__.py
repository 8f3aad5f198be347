"""Minimal float64 reverse-mode autodiff engine."""
from .conv import adaptive_avg_pool2d, conv1d, conv1d_out_len, conv2d, conv_transpose1d
from .gradcheck import gradcheck, numeric_grad, relative_error
from .module import Module
from .optim import Adam, NonFiniteGradientError
from .spectral import SpectralNormState, largest_singular_value, spectral_normalize
from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    clip,
    concat,
    div,
    exp,
    getitem,
    global_layer_norm,
    is_grad_enabled,
    l1_norm,
    l2_norm_sq,
    leaky_relu,
    log,
    log10,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    pad_last,
    parameter,
    power,
    prelu,
    relu,
    reshape,
    scale,
    sigmoid,
    sqrt,
    stack,
    sub,
    tabs,
    tanh,
    transpose,
    tsum,
    zero_grad,
)
