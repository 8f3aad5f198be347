"""A walk through the quality metrics on one synthetic utterance.

Run: python demos/01_metrics_tour.py
"""
import numpy as np

from tsegan.data import make_pair, DatasetSpec
from tsegan.metrics import q_metric, si_snr, snr, ssnr

pair = make_pair(DatasetSpec(duration=1.0, snr_range=(0, 0)), 0)
s, x = pair.clean.samples, pair.noisy.samples
print(f"noisy input mixed at {pair.true_snr:.1f} dB")
print(f"  SNR    {snr(x, s).value:7.3f} dB")
print(f"  SI-SNR {si_snr(x, s).value:7.3f} dB")
print(f"  SSNR   {ssnr(x, s, sample_rate=8000).value:7.3f} dB (per-frame, clamped to [-10, 35])")

# SI-SNR ignores the estimate's gain; plain SNR punishes it.
for gain in (0.5, 2.0):
    print(f"gain {gain}: SNR {snr(gain * x, s).value:7.3f}  SI-SNR {si_snr(gain * x, s).value:7.3f}")

# A perfect estimate saturates at the +120 dB cap rather than +inf.
perfect = si_snr(s, s)
print(f"SI-SNR(s, s) = {perfect.value} dB, capped={perfect.capped}")

# Q squashes a dB value into [-1, 1] with tanh(dB / 100); it is what the discriminator learns to predict.
for est, label in ((x, "noisy"), (0.5 * (x + s), "halfway"), (s, "clean")):
    print(f"Q({label:7s}) = {q_metric(est, s).value:+.4f}")

# The ordering SNR <= SI-SNR is not a law: shrink the estimate and add an orthogonal error.
ref = np.array([1.0, -1.0, 1.0, -1.0])
est = 0.5 * ref + np.array([1.0, 1.0, -1.0, -1.0])
print(f"shrunk estimate: SNR {snr(est, ref).value:.3f} dB > SI-SNR {si_snr(est, ref).value:.3f} dB")
