"""Command-line entry point: ``tsegan <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import theory
from .data import DatasetSpec, load_wav, make_corpus, read_manifest, write_corpus
from .metrics import q_metric, si_snr, snr, ssnr
from .train import ConfigError, TrainConfig, TrainingAborted, evaluate, train

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; route it to the validation code instead
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _cmd_synth(args) -> int:
    spec = DatasetSpec(args.n, args.dur, args.sr, (args.snr_min, args.snr_max), args.noise, args.seed)
    manifest = write_corpus(args.out, make_corpus(spec, args.offset))
    print(f"wrote {spec.n_utterances} pairs to {manifest}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = TrainConfig.from_file(args.config)
    if args.resume and not Path(args.resume).is_file():
        raise ConfigError(f"resume checkpoint not found: {args.resume}")
    state = train(cfg, resume=args.resume)
    print(f"finished {state.epoch} epochs; best val SI-SNR {state.best_val:.3f} dB; checkpoints in {cfg.ckpt_dir}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    if not Path(args.ckpt).is_file():
        raise ConfigError(f"checkpoint not found: {args.ckpt}")
    if not Path(args.data).is_file():
        raise ConfigError(f"manifest not found: {args.data}")
    pairs = read_manifest(args.data)
    if not pairs:
        raise ConfigError(f"manifest {args.data} lists no pairs")
    report = evaluate(args.ckpt, pairs, out_csv=args.out_csv, write_wavs=args.write_wavs)
    print(report.summary())
    return EXIT_OK


def _cmd_metrics(args) -> int:
    est, ref = load_wav(args.est), load_wav(args.ref)
    if est.sample_rate != ref.sample_rate:
        raise ConfigError(f"sample rates differ: {est.sample_rate} vs {ref.sample_rate}")
    if len(est) != len(ref):
        raise ConfigError(f"lengths differ: {len(est)} vs {len(ref)} samples")
    sr = ref.sample_rate
    frame = int(round(args.ssnr_frame * 1e-3 * sr))
    hop = int(round(args.ssnr_hop * 1e-3 * sr))
    for label, m in (("si_snr_db", si_snr(est, ref)), ("snr_db", snr(est, ref))):
        print(f"{label}\t{m.value:.6f}{'  (capped)' if m.capped else ''}")
    if frame <= len(ref):
        print(f"ssnr_db\t{ssnr(est, ref, frame, hop).value:.6f}")
    else:
        print(f"ssnr_db\tnan  (signal shorter than one {args.ssnr_frame} ms frame)")
    print(f"q_si_snr\t{q_metric(est, ref).value:.6f}")
    return EXIT_OK


def _cmd_theory(args) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    t0 = time.perf_counter()
    reports = theory.verify_all(args.samples, args.seed, args.c)
    for r in reports:
        print(r.summary())
    if args.csv:
        Path(args.csv).write_text(theory.reports_to_csv(reports))
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if all(r.passed or r.skipped for r in reports) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tsegan", description="Time-domain GAN speech enhancement toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth-data", help="write a synthetic noisy/clean WAV corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--dur", type=float, default=1.0)
    s.add_argument("--sr", type=int, default=8000)
    s.add_argument("--snr-min", type=float, default=-5.0)
    s.add_argument("--snr-max", type=float, default=5.0)
    s.add_argument("--noise", choices=("white", "pink"), default="white")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--offset", type=int, default=0, help="first utterance index (keeps splits disjoint)")
    s.set_defaults(func=_cmd_synth)

    t = sub.add_parser("train", help="train from a key = value config file")
    t.add_argument("--config", required=True)
    t.add_argument("--resume")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("evaluate", help="score a checkpoint on a manifest")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out-csv", required=True)
    e.add_argument("--write-wavs")
    e.set_defaults(func=_cmd_evaluate)

    m = sub.add_parser("metrics", help="compare two WAV files")
    m.add_argument("--est", required=True)
    m.add_argument("--ref", required=True)
    m.add_argument("--ssnr-frame", type=float, default=32.0, help="frame length in ms")
    m.add_argument("--ssnr-hop", type=float, default=16.0, help="hop in ms")
    m.set_defaults(func=_cmd_metrics)

    v = sub.add_parser("verify-theory", help="numerically check the objective bounds")
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--c", type=float, default=None, help="finite stand-in for SI-SNR(s, s)")
    v.add_argument("--csv")
    v.set_defaults(func=_cmd_theory)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:  # config, WAV and checkpoint errors are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingAborted, OSError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
