"""Train a small enhancement model on synthetic speech and look at what it learned.

By default this is a short run (3 epochs, 40 utterances) that finishes in a
couple of minutes; pass --full for the desk-scale setting used by the
acceptance suite (30 epochs, 200 utterances, about 25 minutes on one core).

Run: python demos/04_desk_training.py [--preset m_tsegan_l1] [--full]
"""
import argparse
import logging
import tempfile

from tsegan.train import PRESETS, discriminator_rank_agreement, evaluate, heldout_corpus, preset, train

ap = argparse.ArgumentParser()
ap.add_argument("--preset", default="m_tsegan_l1", choices=PRESETS)
ap.add_argument("--full", action="store_true")
args = ap.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")

out = tempfile.mkdtemp(prefix="tsegan-demo-")
small = {} if args.full else dict(epochs=3, n_utterances=40, n_val=10)
cfg = preset(args.preset, ckpt_dir=out, **small)
print(f"training {cfg.name} ({cfg.objective}, {cfg.family}) for {cfg.epochs} epochs into {out}")
state = train(cfg)

test = heldout_corpus(cfg, 50)
report = evaluate(state, test, out_csv=f"{out}/report.csv")
print(report.summary())

if state.discriminator is not None:
    rho, _, _ = discriminator_rank_agreement(state, test, candidate="noisy")
    print(f"discriminator vs true Q on held-out noisy pairs: Spearman {rho:.3f}")
    rho, scores, q = discriminator_rank_agreement(state, test, candidate="enhanced")
    print(f"... and on the enhanced outputs: Spearman {rho:.3f}")
    for d, t in list(zip(scores, q))[:5]:
        print(f"  D={d:+.3f}  Q={t:+.3f}")
