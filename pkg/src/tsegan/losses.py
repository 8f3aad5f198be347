"""Adversarial and reconstruction objectives.

Discriminator scores arrive as Tensors of shape ``[batch]`` (or scalars).
Q targets are plain floats/arrays: they are constants with no gradient path.
The L1 penalty is the mean absolute error, so ``lam`` does not depend on
signal length.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .metrics import DEFAULT_BETA, si_snr_t

FAMILIES = ("wgan", "metric_gan")


@dataclass
class LossConfig:
    family: str = "metric_gan"
    lam: float = 200.0
    q_target: float = 1.0
    q_base: str = "si-snr"
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not -1.0 <= self.q_target <= 1.0:
            raise ValueError(f"q_target must lie in [-1, 1], got {self.q_target}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def _same_shape(gx: Tensor, s: Tensor, op: str) -> None:
    if gx.shape != s.shape:
        raise ValueError(f"{op}: shape mismatch {gx.shape} vs {s.shape}")


def l1_penalty(gx, s) -> Tensor:
    gx, s = ag.as_tensor(gx), ag.as_tensor(s)
    _same_shape(gx, s, "l1_penalty")
    return ag.mean(ag.tabs(ag.sub(gx, s)))


def wgan_d_loss(d_ss, d_gs) -> Tensor:
    """mean(-D(s,s) + D(G(x),s))."""
    return ag.mean(ag.sub(d_gs, d_ss))


def wgan_g_loss(d_gs, gx, s, lam: float) -> Tensor:
    loss = ag.neg(ag.mean(d_gs))
    if lam:
        loss = ag.add(loss, ag.scale(l1_penalty(gx, s), lam))
    else:
        _same_shape(ag.as_tensor(gx), ag.as_tensor(s), "wgan_g_loss")
    return loss


def metric_d_loss(d_ss, d_gs, q_ss, q_gs) -> Tensor:
    """mean over the batch of (D(s,s) - Q(s,s))^2 + (D(G(x),s) - Q(G(x),s))^2."""
    d_ss, d_gs = ag.as_tensor(d_ss), ag.as_tensor(d_gs)
    r1 = ag.sub(d_ss, np.broadcast_to(np.asarray(q_ss, dtype=float), d_ss.shape))
    r2 = ag.sub(d_gs, np.broadcast_to(np.asarray(q_gs, dtype=float), d_gs.shape))
    return ag.mean(ag.add(ag.mul(r1, r1), ag.mul(r2, r2)))


def metric_g_loss(d_gs, gx, s, q: float = 1.0, lam: float = 200.0) -> Tensor:
    r = ag.sub(d_gs, q)
    loss = ag.mean(ag.mul(r, r))
    if lam:
        loss = ag.add(loss, ag.scale(l1_penalty(gx, s), lam))
    else:
        _same_shape(ag.as_tensor(gx), ag.as_tensor(s), "metric_g_loss")
    return loss


def si_snr_loss(gx, s) -> Tensor:
    return ag.neg(ag.mean(si_snr_t(gx, s)))


def mse_loss(gx, s) -> Tensor:
    gx, s = ag.as_tensor(gx), ag.as_tensor(s)
    _same_shape(gx, s, "mse_loss")
    d = ag.sub(gx, s)
    return ag.mean(ag.mul(d, d))
