"""Training driver: alternating discriminator/generator updates, plateau LR rule,
checkpointing and evaluation reports."""
from __future__ import annotations

import csv
import ctypes
import io
import logging
import time
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import autograd as ag
from .autograd import Adam, NonFiniteGradientError
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import (
    TEST_OFFSET,
    VAL_OFFSET,
    DatasetSpec,
    NoisyCleanPair,
    make_corpus,
    read_manifest,
    save_wav,
    segment_pair,
)
from .discriminator import Discriminator, DiscriminatorConfig
from .generator import Generator, GeneratorConfig
from .losses import LossConfig, metric_d_loss, metric_g_loss, mse_loss, si_snr_loss, wgan_d_loss, wgan_g_loss
from .metrics import AudioSignal, q_metric, si_snr, si_snr_t, snr, ssnr

log = logging.getLogger(__name__)

OBJECTIVES = ("gan", "mse", "si_snr")
EPOCH_LOG_HEADER = ["epoch", "lr", "g_loss", "d_loss", "train_sisnr", "val_sisnr"]
REPORT_HEADER = ["utt_id", "sisnr_noisy", "sisnr_enh", "snr_noisy", "snr_enh", "ssnr_noisy", "ssnr_enh"]


class ConfigError(ValueError):
    pass


class TrainingAborted(RuntimeError):
    pass


@dataclass
class TrainConfig:
    name: str = "m_tsegan_l1"
    # generator
    n_filters: int = 64
    window: int = 16
    bottleneck: int = 32
    hidden: int = 64
    kernel: int = 3
    blocks: int = 4
    repeats: int = 2
    norm: str = "gln"
    # discriminator
    disc_channels: tuple[int, ...] = (8, 16, 32, 64)
    disc_kernels: tuple[int, ...] = (5, 7, 9, 11)
    disc_fc: tuple[int, ...] = (256, 64)
    sn_iters: int = 1
    # objective
    objective: str = "gan"
    family: str = "metric_gan"
    lam: float = 200.0
    q_target: float = 1.0
    q_base: str = "si-snr"
    beta: float = 100.0
    # optimizer and schedule
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 70
    epochs: int = 30
    lr_patience: int = 3
    lr_factor: float = 0.5
    d_steps_per_g_step: int = 1
    seed: int = 0
    # data
    n_utterances: int = 200
    n_val: int = 50
    duration: float = 1.0
    sample_rate: int = 8000
    snr_min: float = -5.0
    snr_max: float = 5.0
    noise_kind: str = "white"
    data_seed: int = 0
    manifest: str = ""
    val_manifest: str = ""
    segment: float = 1.0
    # output
    ckpt_dir: str = "checkpoints"
    save_optimizer: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not 0 < self.lr_factor < 1:
            raise ConfigError(f"lr_factor must lie in (0, 1), got {self.lr_factor}")
        if self.lr_patience < 1:
            raise ConfigError(f"lr_patience must be >= 1, got {self.lr_patience}")
        if self.epochs < 0 or self.d_steps_per_g_step < 1:
            raise ConfigError("epochs must be >= 0 and d_steps_per_g_step >= 1")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        try:
            self.loss_config()
            self.generator_config()
            self.discriminator_config()
            self.dataset_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # -- derived configs -----------------------------------------------------
    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(self.n_filters, self.window, self.bottleneck, self.hidden,
                               self.kernel, self.blocks, self.repeats, self.norm)

    def discriminator_config(self) -> DiscriminatorConfig:
        mode = "wasserstein" if self.family == "wgan" else "metric"
        return DiscriminatorConfig(channels=self.disc_channels, kernels=self.disc_kernels,
                                   fc=self.disc_fc, mode=mode, sn_iters=self.sn_iters)

    def loss_config(self) -> LossConfig:
        return LossConfig(self.family, self.lam, self.q_target, self.q_base, self.beta)

    def dataset_spec(self, n: int | None = None) -> DatasetSpec:
        return DatasetSpec(self.n_utterances if n is None else n, self.duration, self.sample_rate,
                           (self.snr_min, self.snr_max), self.noise_kind, self.data_seed)

    @property
    def adversarial(self) -> bool:
        return self.objective == "gan"

    # -- text form ---------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "TrainConfig | None" = None) -> "TrainConfig":
        """Parse ``key = value`` lines. A ``preset = NAME`` line (if any) picks the base."""
        kv = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k in kv:
                raise ConfigError(f"line {lineno}: duplicate key {k!r}")
            kv[k] = v
        if "preset" in kv:
            base = preset(kv.pop("preset"))
        base = base or cls()
        hints = typing.get_type_hints(cls)
        known = {f.name for f in fields(cls)}
        updates = {}
        for k, v in kv.items():
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}")
            updates[k] = _coerce(k, v, hints[k])
        return replace(base, **updates)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text())


def _coerce(key: str, value: str, tp):
    try:
        if tp is bool:
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if tp in (int, float, str):
            return tp(value)
        if typing.get_origin(tp) is tuple:
            return tuple(int(x) for x in value.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    raise ConfigError(f"unsupported type for {key}")


_PRESETS = {
    "conv_tasnet": dict(objective="si_snr"),
    "conv_tasnet_mse": dict(objective="mse"),
    "w_tsegan_l1": dict(objective="gan", family="wgan", lam=200.0),
    "m_tsegan_snr": dict(objective="gan", family="metric_gan", lam=0.0, q_base="snr"),
    "m_tsegan_sisnr": dict(objective="gan", family="metric_gan", lam=0.0, q_base="si-snr"),
    "m_tsegan_l1": dict(objective="gan", family="metric_gan", lam=200.0, q_base="si-snr"),
}
PRESETS = tuple(_PRESETS)
DESK = dict(batch_size=8, epochs=30, sample_rate=8000, window=16, n_utterances=200)


def preset(name: str, desk: bool = True, **overrides) -> TrainConfig:
    """Named training configuration. ``desk`` applies the small-corpus, batch-8 settings."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    kw = dict(name=name, **_PRESETS[name])
    if desk:
        kw.update(DESK)
    kw.update(overrides)
    return TrainConfig(**kw)


class PlateauSchedule:
    """Multiply the LR by ``factor`` once the monitored value has failed to
    improve for ``patience`` consecutive epochs; the counter then restarts."""

    def __init__(self, lr: float, patience: int = 3, factor: float = 0.5):
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.best = np.inf
        self.bad = 0

    def step(self, value: float) -> float:
        if value < self.best:
            self.best = value
            self.bad = 0
        else:
            self.bad += 1
            if self.bad >= self.patience:
                self.lr *= self.factor
                self.bad = 0
        return self.lr

    def state(self) -> np.ndarray:
        return np.array([self.lr, self.best, float(self.bad)])

    def load(self, arr) -> None:
        self.lr, self.best, self.bad = float(arr[0]), float(arr[1]), int(arr[2])


def tune_allocator() -> bool:
    """Keep large temporaries on the heap instead of fresh mmaps (glibc only).

    Returns False when mallopt is unavailable; the effect is purely on speed.
    """
    try:
        libc = ctypes.CDLL("libc.so.6")
    except OSError:
        return False
    M_TRIM_THRESHOLD, M_MMAP_THRESHOLD = -1, -3
    ok = libc.mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024)
    ok &= libc.mallopt(M_TRIM_THRESHOLD, 1 << 30)
    return bool(ok)


# ---------------------------------------------------------------------------
# data


def _stack(pairs: list[NoisyCleanPair]) -> tuple[np.ndarray, np.ndarray]:
    lengths = {len(p.clean) for p in pairs}
    if len(lengths) != 1:
        raise ValueError(f"pairs of unequal length in one batch: {sorted(lengths)}")
    return np.stack([p.noisy.samples for p in pairs]), np.stack([p.clean.samples for p in pairs])


def load_splits(cfg: TrainConfig) -> tuple[list[NoisyCleanPair], list[NoisyCleanPair]]:
    if cfg.manifest:
        train = [seg for p in read_manifest(cfg.manifest) for seg in segment_pair(p, cfg.segment)]
        val = [seg for p in read_manifest(cfg.val_manifest) for seg in segment_pair(p, cfg.segment)] if cfg.val_manifest else []
    else:
        train = make_corpus(cfg.dataset_spec())
        val = make_corpus(cfg.dataset_spec(cfg.n_val), offset=VAL_OFFSET) if cfg.n_val else []
    if not train:
        raise ConfigError("training set is empty")
    return train, val


def heldout_corpus(cfg: TrainConfig, n: int = 50) -> list[NoisyCleanPair]:
    """Held-out synthetic pairs, disjoint from the train and validation ranges."""
    return make_corpus(cfg.dataset_spec(n), offset=TEST_OFFSET)


# ---------------------------------------------------------------------------
# model state


@dataclass
class TrainState:
    cfg: TrainConfig
    generator: Generator
    discriminator: Discriminator | None
    opt_g: Adam
    opt_d: Adam | None
    schedule: PlateauSchedule
    epoch: int = 0
    best_val: float = -np.inf
    history: list[dict] = field(default_factory=list)

    @classmethod
    def create(cls, cfg: TrainConfig) -> "TrainState":
        g = Generator(cfg.generator_config(), seed=cfg.seed)
        d = Discriminator(g, cfg.discriminator_config(), seed=cfg.seed + 1) if cfg.adversarial else None
        betas = (cfg.beta1, cfg.beta2)
        opt_g = Adam(g.parameters(), cfg.lr, betas, cfg.eps)
        opt_d = Adam(d.parameters(), cfg.lr, betas, cfg.eps) if d else None
        return cls(cfg, g, d, opt_g, opt_d, PlateauSchedule(cfg.lr, cfg.lr_patience, cfg.lr_factor))

    def arrays(self, with_optimizer: bool = True) -> dict[str, np.ndarray]:
        out = {f"G.{n}": p.data for n, p in self.generator.named_parameters()}
        if self.discriminator:
            out.update({f"D.{n}": p.data for n, p in self.discriminator.named_parameters()})
            for i, layer in enumerate(self.discriminator.layers()):
                out[f"SN.{i}.u"], out[f"SN.{i}.v"] = layer.sn.u, layer.sn.v
        if with_optimizer:
            for tag, opt in (("OG", self.opt_g), ("OD", self.opt_d)):
                if opt:
                    out.update({f"{tag}.{k}": v for k, v in opt.state_arrays().items()})
        out["meta.schedule"] = self.schedule.state()
        out["meta.epoch"] = np.array([float(self.epoch)])
        out["meta.best_val"] = np.array([self.best_val])
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        def put(prefix, module):
            for n, p in module.named_parameters():
                key = f"{prefix}.{n}"
                if key not in arrays:
                    raise CheckpointError(f"checkpoint lacks parameter {key}")
                if arrays[key].shape != p.shape:
                    raise CheckpointError(f"shape mismatch for {key}: {arrays[key].shape} vs {p.shape}")
                p.data[...] = arrays[key]

        put("G", self.generator)
        if self.discriminator:
            put("D", self.discriminator)
            for i, layer in enumerate(self.discriminator.layers()):
                layer.sn.u[...] = arrays[f"SN.{i}.u"]
                layer.sn.v[...] = arrays[f"SN.{i}.v"]
        for tag, opt in (("OG", self.opt_g), ("OD", self.opt_d)):
            if opt and f"{tag}.t" in arrays:
                opt.load_state_arrays({k[len(tag) + 1:]: v for k, v in arrays.items() if k.startswith(tag + ".")})
        if "meta.schedule" in arrays:
            self.schedule.load(arrays["meta.schedule"])
            self.epoch = int(arrays["meta.epoch"][0])
            self.best_val = float(arrays["meta.best_val"][0])
        self._set_lr(self.schedule.lr)

    def _set_lr(self, lr: float) -> None:
        self.opt_g.lr = lr
        if self.opt_d:
            self.opt_d.lr = lr

    def save(self, path) -> Path:
        return save_checkpoint(path, self.arrays(self.cfg.save_optimizer), self.cfg.to_text())

    @classmethod
    def load(cls, path) -> "TrainState":
        arrays, text = load_checkpoint(path)
        try:
            cfg = TrainConfig.from_text(text)
        except ConfigError as exc:
            raise CheckpointError(f"{path}: unreadable config echo ({exc})") from None
        state = cls.create(cfg)
        state.load_arrays(arrays)
        return state


# ---------------------------------------------------------------------------
# one update


def _q_values(est: np.ndarray, ref: np.ndarray, lc: LossConfig) -> np.ndarray:
    return np.array([q_metric(e, r, lc.q_base, lc.beta).value for e, r in zip(est, ref)])


def discriminator_step(state: TrainState, gx: np.ndarray, x_clean: np.ndarray) -> float:
    """One D update with the shared encoder frozen; ``gx`` is a constant."""
    d, opt = state.discriminator, state.opt_d
    lc = state.cfg.loss_config()
    d.power_iteration()
    d_gs = d(gx, x_clean, encoder_frozen=True)
    d_ss = d(x_clean, x_clean, encoder_frozen=True)
    if lc.family == "wgan":
        loss = wgan_d_loss(d_ss, d_gs)
    else:
        loss = metric_d_loss(d_ss, d_gs, _q_values(x_clean, x_clean, lc), _q_values(gx, x_clean, lc))
    _check_finite(loss, "discriminator")
    opt.zero_grad()
    loss.backward()
    opt.step()
    return loss.item()


def generator_loss(state: TrainState, gx, clean: np.ndarray):
    cfg = state.cfg
    if cfg.objective == "mse":
        return mse_loss(gx, clean)
    if cfg.objective == "si_snr":
        return si_snr_loss(gx, clean)
    lc = cfg.loss_config()
    d_gs = state.discriminator(gx, clean, encoder_frozen=False)
    if lc.family == "wgan":
        return wgan_g_loss(d_gs, gx, clean, lc.lam)
    return metric_g_loss(d_gs, gx, clean, lc.q_target, lc.lam)


def _check_finite(loss, who: str) -> None:
    if not np.isfinite(loss.data).all():
        raise TrainingAborted(f"{who} loss became non-finite ({loss.item()})")


def train_step(state: TrainState, noisy: np.ndarray, clean: np.ndarray) -> tuple[float, float, float]:
    """D step(s) on a detached G(x), then one G step with the encoder trainable.

    Returns (g_loss, d_loss, mean train SI-SNR); d_loss is NaN without a discriminator.
    """
    g = state.generator
    gx = g(noisy)
    d_loss = np.nan
    if state.discriminator:
        gx_const = gx.data.copy()
        for _ in range(state.cfg.d_steps_per_g_step):
            d_loss = discriminator_step(state, gx_const, clean)
    loss = generator_loss(state, gx, clean)
    _check_finite(loss, "generator")
    state.opt_g.zero_grad()
    loss.backward()
    try:
        state.opt_g.step()
    except NonFiniteGradientError as exc:
        raise TrainingAborted(str(exc)) from None
    if state.discriminator:
        state.discriminator.zero_grad()
    with ag.no_grad():
        sisnr = float(np.mean(si_snr_t(gx.data, clean).data))
    return loss.item(), d_loss, sisnr


def mean_sisnr(generator: Generator, pairs: list[NoisyCleanPair], chunk: int = 16) -> float:
    if not pairs:
        return float("nan")
    noisy, clean = _stack(pairs)
    enh = generator.enhance_batch(noisy, chunk)
    return float(np.mean([si_snr(e, c).value for e, c in zip(enh, clean)]))


# ---------------------------------------------------------------------------
# training loop


def _fmt(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.6f}"


def train(cfg: TrainConfig, resume: str | Path | None = None, data=None, on_epoch: Callable | None = None) -> TrainState:
    """Run ``cfg.epochs`` epochs, writing ``epoch_NNN.ckpt``, ``last.ckpt``,
    ``best.ckpt`` and ``epoch_log.csv`` into ``cfg.ckpt_dir``.

    ``data`` optionally supplies ``(train_pairs, val_pairs)``. On a non-finite
    loss the run stops with TrainingAborted; checkpoints already on disk are
    left untouched.
    """
    tune_allocator()
    out = Path(cfg.ckpt_dir)
    out.mkdir(parents=True, exist_ok=True)
    if resume:
        state = TrainState.load(resume)
        state.cfg = cfg
    else:
        state = TrainState.create(cfg)
    train_pairs, val_pairs = data if data is not None else load_splits(cfg)
    noisy_all, clean_all = _stack(train_pairs)
    log_path = out / "epoch_log.csv"
    if not resume or not log_path.exists():
        log_path.write_text(",".join(EPOCH_LOG_HEADER) + "\n")
    rng = np.random.default_rng([cfg.seed, 7])
    for _ in range(state.epoch):  # keep shuffles aligned after a resume
        rng.permutation(len(train_pairs))

    while state.epoch < cfg.epochs:
        t0 = time.perf_counter()
        order = rng.permutation(len(train_pairs))
        g_losses, d_losses, sisnrs = [], [], []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            gl, dl, s = train_step(state, noisy_all[idx], clean_all[idx])
            g_losses.append(gl)
            d_losses.append(dl)
            sisnrs.append(s)
        state.epoch += 1
        g_loss = float(np.mean(g_losses))
        d_loss = float(np.mean(d_losses)) if state.discriminator else float("nan")
        val = mean_sisnr(state.generator, val_pairs)
        lr_used = state.schedule.lr
        state._set_lr(state.schedule.step(g_loss))
        row = dict(epoch=state.epoch, lr=lr_used, g_loss=g_loss, d_loss=d_loss,
                   train_sisnr=float(np.mean(sisnrs)), val_sisnr=val)
        state.history.append(row)
        with open(log_path, "a") as f:
            f.write(",".join([str(state.epoch)] + [_fmt(row[k]) for k in EPOCH_LOG_HEADER[1:]]) + "\n")
        improved = np.isfinite(val) and val > state.best_val
        if improved:
            state.best_val = val
        state.save(out / f"epoch_{state.epoch:03d}.ckpt")
        state.save(out / "last.ckpt")
        if improved or not (out / "best.ckpt").exists():
            state.save(out / "best.ckpt")
        log.info("epoch %d lr=%.2e g=%.4f d=%.4f train_sisnr=%.2f val_sisnr=%.2f (%.1fs)",
                 state.epoch, lr_used, g_loss, d_loss, row["train_sisnr"], val, time.perf_counter() - t0)
        if on_epoch:
            on_epoch(state, row)
    return state


def read_epoch_log(path) -> list[dict]:
    with open(path, newline="") as f:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class ReportRow:
    utt_id: str
    sisnr_noisy: float
    sisnr_enh: float
    snr_noisy: float
    snr_enh: float
    ssnr_noisy: float
    ssnr_enh: float


@dataclass
class MetricReport:
    rows: list[ReportRow]

    def mean(self, col: str) -> float:
        return float(np.mean([getattr(r, col) for r in self.rows]))

    @property
    def means(self) -> dict[str, float]:
        return {c: self.mean(c) for c in REPORT_HEADER[1:]}

    @property
    def improvements(self) -> dict[str, float]:
        m = self.means
        return {k: m[f"{k}_enh"] - m[f"{k}_noisy"] for k in ("sisnr", "snr", "ssnr")}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow([r.utt_id] + [repr(float(getattr(r, c))) for c in REPORT_HEADER[1:]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricReport":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append(ReportRow(rec["utt_id"], *(float(rec[c]) for c in REPORT_HEADER[1:])))
        return cls(rows)

    def summary(self) -> str:
        m, d = self.means, self.improvements
        return (f"n={len(self.rows)} SI-SNR {m['sisnr_noisy']:.2f} -> {m['sisnr_enh']:.2f} dB ({d['sisnr']:+.2f}), "
                f"SNR {m['snr_noisy']:.2f} -> {m['snr_enh']:.2f} dB ({d['snr']:+.2f}), "
                f"SSNR {m['ssnr_noisy']:.2f} -> {m['ssnr_enh']:.2f} dB ({d['ssnr']:+.2f})")


Enhancer = Callable[[np.ndarray, np.ndarray], np.ndarray]


def identity_enhancer(noisy: np.ndarray, clean: np.ndarray) -> np.ndarray:
    return noisy


def oracle_enhancer(noisy: np.ndarray, clean: np.ndarray) -> np.ndarray:
    return clean


def generator_enhancer(generator: Generator) -> Enhancer:
    def run(noisy, clean):
        return generator.enhance_batch(noisy[None])[0]
    return run


def evaluate(model, pairs: list[NoisyCleanPair], enhancer: Enhancer | None = None,
             out_csv=None, write_wavs=None) -> MetricReport:
    """Score ``pairs`` before and after enhancement.

    ``model`` is a checkpoint path, a TrainState, a Generator, or None when an
    ``enhancer`` hook is given.
    """
    if not pairs:
        raise ValueError("evaluate needs a non-empty dataset")
    if enhancer is None:
        if isinstance(model, (str, Path)):
            model = TrainState.load(model)
        if isinstance(model, TrainState):
            model = model.generator
        if not isinstance(model, Generator):
            raise TypeError(f"cannot evaluate model of type {type(model).__name__}")
        enhancer = generator_enhancer(model)
    wav_dir = Path(write_wavs) if write_wavs else None
    if wav_dir:
        wav_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, p in enumerate(pairs):
        s, x = p.clean.samples, p.noisy.samples
        y = np.asarray(enhancer(x, s), dtype=np.float64)
        sr = p.clean.sample_rate
        uid = f"utt{i:05d}"
        rows.append(ReportRow(
            uid,
            si_snr(x, s).value, si_snr(y, s).value,
            snr(x, s).value, snr(y, s).value,
            ssnr(x, s, sample_rate=sr).value, ssnr(y, s, sample_rate=sr).value,
        ))
        if wav_dir:
            save_wav(wav_dir / f"{uid}.wav", AudioSignal(y, sr))
    report = MetricReport(rows)
    if out_csv:
        Path(out_csv).write_text(report.to_csv())
    return report


def discriminator_rank_agreement(state: TrainState, pairs: list[NoisyCleanPair],
                                 candidate: str = "noisy") -> tuple[float, np.ndarray, np.ndarray]:
    """Spearman correlation between discriminator scores and the true Q on ``pairs``.

    ``candidate="noisy"`` scores each pair as given, D(x, s) against Q(x, s).
    ``candidate="enhanced"`` scores the generator's output, D(G(x), s) against
    Q(G(x), s); the generator is trained to push exactly these scores up, so
    this ranking is the harder of the two.
    """
    from scipy.stats import spearmanr

    if state.discriminator is None:
        raise ValueError("configuration has no discriminator")
    if candidate not in ("noisy", "enhanced"):
        raise ValueError(f"candidate must be 'noisy' or 'enhanced', got {candidate!r}")
    lc = state.cfg.loss_config()
    noisy, clean = _stack(pairs)
    est = state.generator.enhance_batch(noisy) if candidate == "enhanced" else noisy
    with ag.no_grad():
        scores = np.concatenate([state.discriminator(est[i : i + 16], clean[i : i + 16]).data
                                 for i in range(0, len(est), 16)])
    q = _q_values(est, clean, lc)
    return float(spearmanr(scores, q).statistic), scores, q
