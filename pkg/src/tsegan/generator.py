"""TasNet-style masking enhancer: learned encoder, TCN mask estimator, overlap-add decoder."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import autograd as ag
from .autograd import Module, Tensor
from .metrics import AudioSignal


@dataclass
class GeneratorConfig:
    n_filters: int = 64      # N, latent channels
    window: int = 16         # L, samples (2 ms at 8 kHz)
    bottleneck: int = 32     # B
    hidden: int = 64         # H
    kernel: int = 3          # P
    blocks: int = 4          # X, dilations 1..2^(X-1)
    repeats: int = 2         # R
    norm: str = "gln"        # "gln" or "none"

    def __post_init__(self):
        if self.window < 2 or self.window % 2:
            raise ValueError(f"window must be even and >= 2, got {self.window}")
        if self.kernel % 2 == 0:
            raise ValueError(f"TCN kernel must be odd for same-length padding, got {self.kernel}")
        if self.norm not in ("gln", "none"):
            raise ValueError(f"norm must be 'gln' or 'none', got {self.norm!r}")

    @property
    def stride(self) -> int:
        return self.window // 2

    @classmethod
    def for_rate(cls, sample_rate: int, window_ms: float = 2.0, **kw) -> "GeneratorConfig":
        return cls(window=int(round(window_ms * 1e-3 * sample_rate)), **kw)

    def receptive_field(self) -> int:
        """Mask receptive field in latent frames (convolutional path only)."""
        return 1 + self.repeats * (self.kernel - 1) * (2**self.blocks - 1)

    def to_dict(self) -> dict:
        return asdict(self)


def _init(rng, shape, fan_in):
    return ag.parameter(rng.uniform(-1.0, 1.0, size=shape) / np.sqrt(fan_in))


class GlobalLayerNorm(Module):
    def __init__(self, channels: int):
        self.gain = ag.parameter(np.ones(channels))
        self.bias = ag.parameter(np.zeros(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return ag.global_layer_norm(x, self.gain, self.bias)


class TCNBlock(Module):
    """1x1 conv -> PReLU -> gLN -> dilated depthwise conv -> PReLU -> gLN -> 1x1 conv, residual."""

    def __init__(self, cfg: GeneratorConfig, dilation: int, rng: np.random.Generator):
        B, H, P = cfg.bottleneck, cfg.hidden, cfg.kernel
        self.dilation = dilation
        self.use_norm = cfg.norm == "gln"
        self.w_in = _init(rng, (H, B, 1), B)
        self.b_in = ag.parameter(np.zeros(H))
        self.a1 = ag.parameter(np.array([0.25]))
        self.w_dw = _init(rng, (H, 1, P), P)
        self.b_dw = ag.parameter(np.zeros(H))
        self.a2 = ag.parameter(np.array([0.25]))
        self.w_out = _init(rng, (B, H, 1), H)
        self.b_out = ag.parameter(np.zeros(B))
        if self.use_norm:
            self.norm1 = GlobalLayerNorm(H)
            self.norm2 = GlobalLayerNorm(H)

    def __call__(self, x: Tensor) -> Tensor:
        P = self.w_dw.shape[-1]
        y = ag.prelu(ag.conv1d(x, self.w_in, bias=self.b_in), self.a1)
        if self.use_norm:
            y = self.norm1(y)
        pad = self.dilation * (P - 1) // 2
        y = ag.conv1d(y, self.w_dw, dilation=self.dilation, padding=pad, groups=y.shape[-2], bias=self.b_dw)
        y = ag.prelu(y, self.a2)
        if self.use_norm:
            y = self.norm2(y)
        y = ag.conv1d(y, self.w_out, bias=self.b_out)
        return ag.add(x, y)


class Generator(Module):
    """Enhancer computing ``V(U(x) * F(U(x)))``.

    ``encoder`` is the conv1d kernel bank U (``[N, 1, L]``, stride L/2, ReLU),
    ``decoder`` the transposed-conv bank V (``[N, 1, L]``), and the TCN
    separator F ends in a 1x1 head plus sigmoid giving N mask channels.
    """

    def __init__(self, cfg: GeneratorConfig | None = None, seed: int = 0, zero_head: bool = False):
        self.cfg = cfg = cfg or GeneratorConfig()
        rng = np.random.default_rng(seed)
        N, L, B = cfg.n_filters, cfg.window, cfg.bottleneck
        self.encoder = _init(rng, (N, 1, L), L)
        self.decoder = _init(rng, (N, 1, L), N)
        self.use_norm = cfg.norm == "gln"
        if self.use_norm:
            self.in_norm = GlobalLayerNorm(N)
        self.w_bottleneck = _init(rng, (B, N, 1), N)
        self.b_bottleneck = ag.parameter(np.zeros(B))
        self.blocks = [TCNBlock(cfg, 2**x, rng) for _ in range(cfg.repeats) for x in range(cfg.blocks)]
        self.a_out = ag.parameter(np.array([0.25]))
        head = np.zeros((N, B, 1)) if zero_head else rng.uniform(-1, 1, (N, B, 1)) / np.sqrt(B)
        self.w_head = ag.parameter(head)
        self.b_head = ag.parameter(np.zeros(N))
        # test hook: constant mask used instead of the TCN output when set
        self._mask_override: float | None = None

    # -- stages ----------------------------------------------------------
    def n_frames(self, n_samples: int) -> int:
        L, S = self.cfg.window, self.cfg.stride
        return (n_samples - L) // S + 1

    def padded_length(self, n_samples: int) -> int:
        L, S = self.cfg.window, self.cfg.stride
        if n_samples < L:
            raise ValueError(f"input of {n_samples} samples is shorter than the {L}-sample window")
        return L + S * -(-(n_samples - L) // S)

    def encode(self, x, frozen: bool = False) -> Tensor:
        """Latent map ``[B?, N, Tf]`` of a waveform ``[T]`` or ``[B, T]``.

        With ``frozen`` the encoder kernel is used as a constant: gradients
        still reach ``x`` but never the encoder weights.
        """
        if isinstance(x, AudioSignal):
            x = x.samples
        x = ag.as_tensor(x)
        if x.shape[-1] < self.cfg.window:
            raise ValueError(f"input of {x.shape[-1]} samples is shorter than the {self.cfg.window}-sample window")
        w = self.encoder.detach() if frozen else self.encoder
        x3 = ag.reshape(x, x.shape[:-1] + (1, x.shape[-1]))
        return ag.relu(ag.conv1d(x3, w, stride=self.cfg.stride))

    def mask(self, latent: Tensor) -> Tensor:
        y = self.in_norm(latent) if self.use_norm else latent
        y = ag.conv1d(y, self.w_bottleneck, bias=self.b_bottleneck)
        for block in self.blocks:
            y = block(y)
        y = ag.prelu(y, self.a_out)
        y = ag.conv1d(y, self.w_head, bias=self.b_head)
        return ag.sigmoid(y)

    def decode(self, masked: Tensor) -> Tensor:
        out = ag.conv_transpose1d(masked, self.decoder, stride=self.cfg.stride)
        return ag.reshape(out, out.shape[:-2] + (out.shape[-1],))

    def forward(self, x) -> Tensor:
        """Differentiable enhancement of ``[T]`` or ``[B, T]``; output has the input's length."""
        if isinstance(x, AudioSignal):
            x = x.samples
        x = ag.as_tensor(x)
        T = x.shape[-1]
        Tp = self.padded_length(T)
        if Tp != T:
            x = ag.pad_last(x, 0, Tp - T)
        latent = self.encode(x)
        if self._mask_override is None:
            m = self.mask(latent)
        else:
            m = np.full(latent.shape, self._mask_override)
        out = self.decode(ag.mul(latent, m))
        return ag.getitem(out, (..., slice(0, T))) if Tp != T else out

    __call__ = forward

    def enhance(self, x: AudioSignal) -> AudioSignal:
        with ag.no_grad():
            y = self.forward(x.samples)
        return AudioSignal(y.data.copy(), x.sample_rate)

    def enhance_batch(self, x: np.ndarray, chunk: int = 16) -> np.ndarray:
        x = np.atleast_2d(x)
        with ag.no_grad():
            return np.concatenate([self.forward(x[i : i + chunk]).data for i in range(0, len(x), chunk)])
