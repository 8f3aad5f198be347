"""Time-domain GAN speech enhancement on a small numpy autodiff engine."""
from .data import AudioSignal, DatasetSpec, NoisyCleanPair, load_wav, mix_at_snr, save_wav
from .discriminator import Discriminator, DiscriminatorConfig
from .generator import Generator, GeneratorConfig
from .losses import LossConfig
from .metrics import q_metric, si_snr, snr, ssnr
from .train import MetricReport, TrainConfig, evaluate, preset, train

__version__ = "0.1.0"
