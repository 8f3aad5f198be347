"""Checking the autograd engine against central finite differences.

The generator and discriminator are trained with a hand-written reverse-mode
engine, so every op is verified numerically. This script runs a handful of
the cases from the test-suite registry and a whole tiny generator.

Run: python demos/02_gradients.py   (from the repository root)
"""
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
import gradsuite  # noqa: E402

from tsegan import autograd as ag  # noqa: E402
from tsegan.generator import Generator, GeneratorConfig  # noqa: E402

for name in ("conv1d", "global_layer_norm", "conv2d", "spectral_normalize", "si_snr_t"):
    print(f"{name:20s} worst relative error {gradsuite.check_case(name, n_instances=5):.2e}")

cfg = GeneratorConfig(n_filters=4, window=4, bottleneck=3, hidden=4, blocks=2, repeats=1)
g = Generator(cfg, seed=0)
x = np.random.default_rng(0).standard_normal(64)
t0 = time.perf_counter()
errs = ag.gradcheck(lambda: ag.mean(ag.mul(g(x), g(x))), g.parameters())
print(f"tiny generator: {len(errs)} parameter tensors, worst error {max(errs):.2e} ({time.perf_counter() - t0:.1f}s)")
