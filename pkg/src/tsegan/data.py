"""Synthetic noisy/clean corpora, SNR-controlled mixing, segmentation and PCM WAV I/O."""
from __future__ import annotations

import logging
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .metrics import AudioSignal

log = logging.getLogger(__name__)

# Pole/zero approximation of a 1/f spectrum (-3 dB/octave) driven by white noise.
_PINK_B = np.array([0.049922035, -0.095993537, 0.050612699, -0.004408786])
_PINK_A = np.array([1.0, -2.494956002, 2.017265875, -0.522189400])

# Utterance indices at or above this offset belong to the held-out split.
TEST_OFFSET = 1_000_000
VAL_OFFSET = 2_000_000


class WavFormatError(ValueError):
    pass


@dataclass
class DatasetSpec:
    n_utterances: int = 200
    duration: float = 1.0
    sample_rate: int = 8000
    snr_range: tuple[float, float] = (-5.0, 5.0)
    noise_kind: str = "white"
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.snr_range[0] > self.snr_range[1]:
            raise ValueError(f"snr_range min > max: {self.snr_range}")
        if self.noise_kind not in ("white", "pink"):
            raise ValueError(f"noise_kind must be 'white' or 'pink', got {self.noise_kind!r}")


@dataclass
class NoisyCleanPair:
    clean: AudioSignal
    noisy: AudioSignal
    true_snr: float

    def __post_init__(self):
        if len(self.clean) != len(self.noisy):
            raise ValueError(f"clean/noisy length mismatch: {len(self.clean)} vs {len(self.noisy)}")


def utterance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, utterance), so generation order never matters."""
    return np.random.default_rng([seed, index])


def synth_clean(duration: float, sample_rate: int, seed: int | np.random.Generator = 0) -> AudioSignal:
    """Voiced-speech proxy: 3-8 harmonics of an f0 in [80, 300] Hz under a slow envelope.

    Peak amplitude is exactly 0.5.
    """
    n = int(round(duration * sample_rate))
    if n < 1:
        raise ValueError(f"duration*rate must give at least one sample, got {duration}*{sample_rate}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    f0 = rng.uniform(80.0, 300.0)
    n_harm = int(rng.integers(3, 9))
    nyq = sample_rate / 2
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        if h * f0 >= nyq:
            break
        x += rng.uniform(0.3, 1.0) / h * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
    env_rate = rng.uniform(0.5, 3.0)
    env = 0.6 + 0.4 * np.sin(2 * np.pi * env_rate * t + rng.uniform(0, 2 * np.pi))
    x *= env
    x *= 0.5 / np.max(np.abs(x))
    return AudioSignal(x, sample_rate)


def harmonic_f0(duration: float, sample_rate: int, seed: int) -> tuple[float, int]:
    """The (f0, harmonic count) that ``synth_clean`` draws for an integer seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(80.0, 300.0), int(rng.integers(3, 9))


def synth_noise(n: int, kind: str, rng: np.random.Generator) -> np.ndarray:
    w = rng.standard_normal(n)
    if kind == "white":
        return w
    if kind == "pink":
        return lfilter(_PINK_B, _PINK_A, w)
    raise ValueError(f"unknown noise kind {kind!r}")


def mix_at_snr(clean: AudioSignal, noise, target_snr: float) -> NoisyCleanPair:
    """Rescale ``noise`` so ``10 log10(|s|^2 / |n'|^2) == target_snr`` and add it."""
    s = clean.samples
    n = noise.samples if isinstance(noise, AudioSignal) else np.asarray(noise, dtype=np.float64)
    if n.shape != s.shape:
        raise ValueError(f"length mismatch: clean {s.shape} vs noise {n.shape}")
    es, en = np.dot(s, s), np.dot(n, n)
    if es == 0 or en == 0:
        raise ValueError("mix_at_snr needs non-zero clean and noise energy")
    gain = np.sqrt(es / (en * 10.0 ** (target_snr / 10.0)))
    noisy = AudioSignal(s + gain * n, clean.sample_rate)
    return NoisyCleanPair(clean, noisy, float(target_snr))


def make_pair(spec: DatasetSpec, index: int) -> NoisyCleanPair:
    rng = utterance_rng(spec.seed, index)
    clean = synth_clean(spec.duration, spec.sample_rate, rng)
    noise = synth_noise(len(clean), spec.noise_kind, rng)
    snr_db = rng.uniform(*spec.snr_range)
    return mix_at_snr(clean, noise, snr_db)


def make_corpus(spec: DatasetSpec, offset: int = 0) -> list[NoisyCleanPair]:
    """``spec.n_utterances`` pairs from utterance indices ``offset, offset+1, ...``.

    Train, validation and test splits use disjoint offsets (0, VAL_OFFSET,
    TEST_OFFSET) so no utterance appears in two splits.
    """
    return [make_pair(spec, offset + i) for i in range(spec.n_utterances)]


def segment(signal: AudioSignal, seg_len: float = 1.0) -> list[AudioSignal]:
    """Non-overlapping ``seg_len``-second pieces; a trailing partial piece is dropped."""
    if seg_len <= 0:
        raise ValueError(f"seg_len must be positive, got {seg_len}")
    n = int(round(seg_len * signal.sample_rate))
    count = len(signal) // n
    if count == 0:
        log.warning("segment: %.3f s signal is shorter than one %.3f s segment", signal.duration, seg_len)
    return [AudioSignal(signal.samples[i * n : (i + 1) * n], signal.sample_rate) for i in range(count)]


def segment_pair(pair: NoisyCleanPair, seg_len: float = 1.0) -> list[NoisyCleanPair]:
    return [
        NoisyCleanPair(c, n, pair.true_snr)
        for c, n in zip(segment(pair.clean, seg_len), segment(pair.noisy, seg_len))
    ]


# ---------------------------------------------------------------------------
# WAV


def load_wav(path) -> AudioSignal:
    """Read a mono 16-bit PCM WAV into floats in [-1, 1)."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate, frames = w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()
            if channels != 1:
                raise WavFormatError(f"{path}: {channels} channels, expected mono")
            if width != 2:
                raise WavFormatError(f"{path}: {8 * width}-bit samples, expected 16-bit PCM")
            raw = w.readframes(frames)
    except wave.Error as exc:
        raise WavFormatError(f"{path}: {exc}") from None
    except EOFError:
        raise WavFormatError(f"{path}: truncated header") from None
    if len(raw) != 2 * frames:
        raise WavFormatError(f"{path}: truncated data, header promises {frames} frames, found {len(raw) // 2}")
    if frames == 0:
        raise WavFormatError(f"{path}: no samples")
    return AudioSignal(np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0, rate)


def save_wav(path, signal: AudioSignal) -> None:
    """Write 16-bit PCM mono; samples are rounded to nearest and clipped to int16."""
    q = np.clip(np.rint(signal.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(signal.sample_rate))
        w.writeframes(q.tobytes())


def write_corpus(out_dir, pairs: list[NoisyCleanPair], manifest_name: str = "manifest.tsv") -> Path:
    """Save pairs as WAVs plus a ``clean_path<TAB>noisy_path<TAB>true_snr_db`` manifest."""
    out = Path(out_dir)
    (out / "clean").mkdir(parents=True, exist_ok=True)
    (out / "noisy").mkdir(parents=True, exist_ok=True)
    lines = []
    for i, p in enumerate(pairs):
        cp, np_ = out / "clean" / f"utt{i:05d}.wav", out / "noisy" / f"utt{i:05d}.wav"
        save_wav(cp, p.clean)
        save_wav(np_, p.noisy)
        lines.append(f"{cp.relative_to(out)}\t{np_.relative_to(out)}\t{p.true_snr:.6f}")
    manifest = out / manifest_name
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def read_manifest(path) -> list[NoisyCleanPair]:
    path = Path(path)
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
        clean_p, noisy_p = (Path(f) if Path(f).is_absolute() else path.parent / f for f in fields[:2])
        pairs.append(NoisyCleanPair(load_wav(clean_p), load_wav(noisy_p), float(fields[2])))
    return pairs
