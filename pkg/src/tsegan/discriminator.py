"""Metric-evaluation discriminator on stacked latent maps of (candidate, reference)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Module, SpectralNormState, Tensor, largest_singular_value
from .generator import Generator
from .metrics import AudioSignal

MODES = ("metric", "wasserstein")


@dataclass
class DiscriminatorConfig:
    channels: tuple[int, ...] = (8, 16, 32, 64)
    kernels: tuple[int, ...] = (5, 7, 9, 11)
    stride: int = 2
    pool: tuple[int, int] = (4, 4)
    fc: tuple[int, ...] = (256, 64)
    leak: float = 0.2
    mode: str = "metric"
    sn_warmup: int = 5000        # cap on power iterations when the vectors are created
    sn_iters: int = 1            # power iterations per training step (minimum)
    sn_tol: float = 1e-4         # then iterate until the singular-pair residual is this small; 0 disables
    sn_max_iters: int = 200
    zero_head: bool = False

    def __post_init__(self):
        if len(self.channels) != len(self.kernels):
            raise ValueError("channels and kernels must have equal length")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


class _SNWeight(Module):
    """A weight tensor with its spectral-normalization state and a bias."""

    def __init__(self, shape: tuple[int, ...], fan_in: int, rng: np.random.Generator, warmup: int, zero: bool = False):
        w = np.zeros(shape) if zero else rng.standard_normal(shape) / np.sqrt(fan_in)
        self.weight = ag.parameter(w)
        self.bias = ag.parameter(np.zeros(shape[0]))
        self.sn = SpectralNormState(shape[0], int(np.prod(shape[1:])), rng)
        if not zero:
            self.sn.converge(w.reshape(shape[0], -1), warmup)

    def normalized(self, iters: int = 0) -> Tensor:
        return ag.spectral_normalize(self.weight, self.sn, iters)

    def matrix(self) -> np.ndarray:
        return self.weight.data.reshape(self.weight.shape[0], -1)


class Discriminator(Module):
    """Scores a candidate against a reference.

    The encoder is the generator's own encoder tensor (shared, not copied).
    Forward passes reuse the stored singular vectors; call ``power_iteration``
    once per training step to refresh them.
    """

    def __init__(self, generator: Generator, cfg: DiscriminatorConfig | None = None, seed: int = 1):
        self.cfg = cfg = cfg or DiscriminatorConfig()
        self._generator = generator
        rng = np.random.default_rng(seed)
        convs = []
        c_in = 2
        for c_out, k in zip(cfg.channels, cfg.kernels):
            convs.append(_SNWeight((c_out, c_in, k, k), c_in * k * k, rng, cfg.sn_warmup))
            c_in = c_out
        self.convs = convs
        widths = [c_in * cfg.pool[0] * cfg.pool[1], *cfg.fc, 1]
        fcs = []
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            last = i == len(widths) - 2
            fcs.append(_SNWeight((b, a), a, rng, cfg.sn_warmup, zero=last and cfg.zero_head))
        self.fcs = fcs

    @property
    def generator(self) -> Generator:
        return self._generator

    def layers(self) -> list[_SNWeight]:
        return [*self.convs, *self.fcs]

    def power_iteration(self, iters: int | None = None) -> None:
        n = self.cfg.sn_iters if iters is None else iters
        for layer in self.layers():
            if np.any(layer.weight.data):
                w2 = layer.matrix()
                layer.sn.power_iterate(w2, n)
                # one iteration per step lags behind Adam on matrices with a small spectral gap
                if self.cfg.sn_tol > 0 and iters is None:
                    layer.sn.converge(w2, self.cfg.sn_max_iters, self.cfg.sn_tol, warn=False)

    def normalized_sigmas(self) -> list[float]:
        """Exact top singular value of every normalized weight matrix (eigen-oracle)."""
        out = []
        for layer in self.layers():
            with ag.no_grad():
                w = layer.normalized(0).data
            out.append(largest_singular_value(w.reshape(w.shape[0], -1)))
        return out

    # -- forward ---------------------------------------------------------
    def featurize(self, candidate, reference, frozen: bool = True) -> Tensor:
        """Stack U(candidate) and U(reference) as channels: ``[B?, 2, N, Tf]``."""
        candidate = candidate.samples if isinstance(candidate, AudioSignal) else candidate
        reference = reference.samples if isinstance(reference, AudioSignal) else reference
        candidate, reference = ag.as_tensor(candidate), ag.as_tensor(reference)
        if candidate.shape != reference.shape:
            raise ValueError(f"length mismatch: candidate {candidate.shape} vs reference {reference.shape}")
        enc = self._generator.encode
        return ag.stack([enc(candidate, frozen), enc(reference, frozen)], axis=-3)

    def score(self, candidate, reference, mode: str | None = None, encoder_frozen: bool = True) -> Tensor:
        """Scalar score per pair: in (-1, 1) for ``metric`` mode, unbounded for ``wasserstein``."""
        mode = mode or self.cfg.mode
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        h = self.featurize(candidate, reference, encoder_frozen)
        batched = h.ndim == 4
        if not batched:
            h = ag.reshape(h, (1,) + h.shape)
        for layer, k in zip(self.convs, self.cfg.kernels):
            h = ag.conv2d(h, layer.normalized(), stride=self.cfg.stride, padding=k // 2, bias=layer.bias)
            h = ag.leaky_relu(h, self.cfg.leak)
        h = ag.adaptive_avg_pool2d(h, self.cfg.pool)
        h = ag.reshape(h, (h.shape[0], -1))
        for i, layer in enumerate(self.fcs):
            h = ag.add(ag.matmul(h, ag.transpose(layer.normalized())), layer.bias)
            if i < len(self.fcs) - 1:
                h = ag.leaky_relu(h, self.cfg.leak)
        h = ag.reshape(h, (h.shape[0],))
        if mode == "metric":
            h = ag.tanh(h)
        return h if batched else ag.reshape(h, ())

    __call__ = score
