"""Waveform quality metrics: SI-SNR, SNR, segmental SNR and the tanh-squashed Q score.

Plain functions work on numpy arrays / AudioSignal and return MetricValue;
the ``*_t`` variants compute the same numbers on autograd Tensors.

SI-SNR zero-means both signals first; SNR and SSNR use raw samples. The
residual energy is floored at ``1e-12 * signal energy`` (so the floor scales
with the signal and every metric stays amplitude-free); a residual on the
floor scores exactly the +120 dB cap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor

CAP_DB = 120.0
GUARD = 1e-12
SSNR_FLOOR = -10.0
SSNR_CEIL = 35.0
DEFAULT_BETA = 100.0


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError(f"AudioSignal needs a non-empty 1-D sample array, got shape {s.shape}")
        if not np.isfinite(s).all():
            raise ValueError("AudioSignal samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class MetricValue:
    value: float
    capped: bool = False

    def __float__(self) -> float:
        return self.value


def _arr(x) -> np.ndarray:
    if isinstance(x, AudioSignal):
        return x.samples
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _pair(est, ref) -> tuple[np.ndarray, np.ndarray]:
    e, r = _arr(est), _arr(ref)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: estimate {e.shape} vs reference {r.shape}")
    if not np.any(r):
        raise ValueError("reference signal is all zeros")
    return e, r


def _ratio_db(signal_energy: float, residual_energy: float, ref_energy: float) -> MetricValue:
    if signal_energy <= 0.0:
        return MetricValue(-CAP_DB, True)
    guard = GUARD * ref_energy
    if residual_energy <= guard:
        return MetricValue(CAP_DB, True)
    db = 10.0 * np.log10(signal_energy / residual_energy)
    capped = abs(db) >= CAP_DB
    return MetricValue(float(np.clip(db, -CAP_DB, CAP_DB)), bool(capped))


def si_snr(est, ref, zero_mean: bool = True) -> MetricValue:
    """Scale-invariant SNR in dB, capped to +/-120 dB."""
    e, r = _pair(est, ref)
    if zero_mean:
        e = e - e.mean()
        r = r - r.mean()
        if not np.any(r):
            raise ValueError("reference signal is constant; SI-SNR undefined after mean removal")
    alpha = np.dot(r, e) / np.dot(r, r)
    target = alpha * r
    t_energy = float(np.dot(target, target))
    res = target - e
    return _ratio_db(t_energy, float(np.dot(res, res)), t_energy)


def snr(est, ref) -> MetricValue:
    e, r = _pair(est, ref)
    s_energy = float(np.dot(r, r))
    res = r - e
    return _ratio_db(s_energy, float(np.dot(res, res)), s_energy)


def ssnr(est, ref, frame_len: int | None = None, hop: int | None = None, sample_rate: int | None = None) -> MetricValue:
    """Segmental SNR: mean of per-frame SNRs clamped to [-10, 35] dB.

    Defaults to 32 ms frames with a 16 ms hop when a sample rate is known
    (from an AudioSignal or ``sample_rate``). Frames whose reference energy is
    more than 100 dB below the loudest frame are skipped.
    """
    if sample_rate is None and isinstance(ref, AudioSignal):
        sample_rate = ref.sample_rate
    if frame_len is None or hop is None:
        if sample_rate is None:
            raise ValueError("ssnr needs frame_len/hop or a sample rate")
        frame_len = frame_len or int(round(0.032 * sample_rate))
        hop = hop or int(round(0.016 * sample_rate))
    e, r = _pair(est, ref)
    if frame_len > r.size or frame_len < 1:
        raise ValueError(f"frame_len {frame_len} invalid for signal of {r.size} samples")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    n_frames = (r.size - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    rf, ef = r[idx], (r - e)[idx]
    s_energy = np.sum(rf * rf, axis=1)
    n_energy = np.sum(ef * ef, axis=1)
    valid = s_energy > 1e-10 * s_energy.max()
    if not np.any(valid):
        raise ValueError("ssnr: no frame with a non-silent reference")
    s_energy, n_energy = s_energy[valid], n_energy[valid]
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(s_energy / np.maximum(n_energy, GUARD * s_energy))
    clamped = np.clip(db, SSNR_FLOOR, SSNR_CEIL)
    return MetricValue(float(clamped.mean()), bool(np.any(clamped != db)))


def q_metric(est, ref, base: str = "si-snr", beta: float = DEFAULT_BETA) -> MetricValue:
    """tanh(metric / beta), in [-1, 1]. ``base`` is ``"si-snr"`` or ``"snr"``."""
    m = _base_metric(base)(est, ref)
    return MetricValue(float(np.tanh(m.value / beta)), m.capped)


def q_from_db(db: float, beta: float = DEFAULT_BETA) -> float:
    return float(np.tanh(db / beta))


def _base_metric(base: str):
    key = base.lower().replace("_", "-")
    if key in ("si-snr", "sisnr"):
        return si_snr
    if key == "snr":
        return snr
    raise ValueError(f"unknown Q base metric {base!r}; expected 'si-snr' or 'snr'")


# ---------------------------------------------------------------------------
# differentiable versions; the last axis is time, leading axes are batch


def _pair_t(est, ref) -> tuple[Tensor, Tensor]:
    est, ref = ag.as_tensor(est), ag.as_tensor(ref)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: estimate {est.shape} vs reference {ref.shape}")
    if np.any(~np.any(ref.data, axis=-1)):
        raise ValueError("reference signal is all zeros")
    return est, ref


def _ratio_db_t(signal_energy: Tensor, residual_energy: Tensor) -> Tensor:
    """10 log10(S / max(R, guard*S)) clipped to the cap; rows with S == 0 give -cap."""
    dead = signal_energy.data <= 0.0
    if np.any(dead):
        # keep the graph finite; those rows are overwritten by a constant below
        signal_energy = ag.add(signal_energy, np.where(dead, 1.0, 0.0))
    guard = ag.scale(signal_energy, GUARD)
    den = ag.add(guard, ag.relu(ag.sub(residual_energy, guard)))  # max(R, guard)
    db = ag.clip(ag.scale(ag.log10(ag.div(signal_energy, den)), 10.0), -CAP_DB, CAP_DB)
    # rows on the floor are exactly +cap, dead rows exactly -cap
    floor = residual_energy.data <= guard.data
    fixed = dead | floor
    if np.any(fixed):
        db = ag.add(ag.mul(db, np.where(fixed, 0.0, 1.0)), np.where(dead, -CAP_DB, np.where(floor, CAP_DB, 0.0)))
    return db


def si_snr_t(est, ref, zero_mean: bool = True) -> Tensor:
    est, ref = _pair_t(est, ref)
    if zero_mean:
        est = ag.sub(est, ag.mean(est, axis=-1, keepdims=True))
        ref = ag.sub(ref, ag.mean(ref, axis=-1, keepdims=True))
    ref_energy = ag.tsum(ag.mul(ref, ref), axis=-1, keepdims=True)
    alpha = ag.div(ag.tsum(ag.mul(ref, est), axis=-1, keepdims=True), ref_energy)
    target = ag.mul(alpha, ref)
    res = ag.sub(target, est)
    t_energy = ag.tsum(ag.mul(target, target), axis=-1)
    r_energy = ag.tsum(ag.mul(res, res), axis=-1)
    return _ratio_db_t(t_energy, r_energy)


def snr_t(est, ref) -> Tensor:
    est, ref = _pair_t(est, ref)
    res = ag.sub(ref, est)
    return _ratio_db_t(ag.tsum(ag.mul(ref, ref), axis=-1), ag.tsum(ag.mul(res, res), axis=-1))


def q_metric_t(est, ref, base: str = "si-snr", beta: float = DEFAULT_BETA) -> Tensor:
    fn = si_snr_t if _base_metric(base) is si_snr else snr_t
    return ag.tanh(ag.scale(fn(est, ref), 1.0 / beta))
