"""Command-line entry point: ``qa3c train | eval | gradcheck``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import parse_config
from .envs import ENV_NAMES
from .exceptions import QA3CError, StorageError, ToleranceError
from .gradcheck import run_gradcheck
from .models import VARIANTS
from .runner import run_eval, run_train

log = logging.getLogger("qa3c")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qa3c", description="Quantum / classical A3C experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an actor-critic pair")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--init-checkpoint", help="start from this checkpoint instead of a seeded init")

    p = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--env", required=True, choices=ENV_NAMES)
    p.add_argument("--episodes", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", default="eval.csv", help="per-episode CSV (default: eval.csv)")

    p = sub.add_parser("gradcheck", help="adjoint vs parameter-shift vs finite-difference gradients")
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--env", required=True, choices=ENV_NAMES)
    p.add_argument("--seed", required=True, type=int)
    return parser


def _train(args) -> None:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise StorageError(f"cannot read config {args.config}: {exc}") from exc
    config = parse_config(text, args.set)
    result = run_train(config, args.init_checkpoint)
    print(f"episodes {result.episodes}  final ma100 {result.final_ma100:.3f}  "
          f"updates {result.updates}  wall {result.wall_time_s:.1f}s  out {config.out_dir}")


def _eval(args) -> None:
    result = run_eval(args.checkpoint, args.env, args.episodes, args.seed, args.out)
    print(f"mean return {result.mean_return:.6g} over {len(result.returns)} episodes (per-episode: {args.out})")


def _gradcheck(args) -> None:
    report = run_gradcheck(args.variant, args.env, args.seed)
    print("\n".join(report.lines()))
    if not report.passed:
        raise ToleranceError(f"gradient mismatch, worst parameter {report.worst_parameter}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"train": _train, "eval": _eval, "gradcheck": _gradcheck}[args.command]
    try:
        handler(args)
    except QA3CError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
