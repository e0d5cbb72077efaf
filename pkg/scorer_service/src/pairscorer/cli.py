"""Command line: train a scorer from a labeled beamset, serve an artifact."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from pairscorer import serve as serve_mod
from pairscorer import train as train_mod
from pairscorer.data import build_training_set_from_file

logger = logging.getLogger("pairscorer")

# small preset keeps CPU demo/training runs quick; base mirrors the
# standard encoder geometry
PRESETS = {
    "base": dict(hidden_size=768, num_layers=12, num_heads=12),
    "small": dict(hidden_size=128, num_layers=4, num_heads=4),
    "tiny": dict(hidden_size=64, num_layers=2, num_heads=2),
}


def cmd_train(args) -> int:
    examples, balance = build_training_set_from_file(args.beams)
    geometry = PRESETS[args.preset]
    config = train_mod.TrainConfig(
        hidden_size=geometry["hidden_size"],
        num_layers=geometry["num_layers"],
        num_heads=geometry["num_heads"],
        dropout=args.dropout,
        classifier_lr=args.classifier_lr,
        encoder_lr=args.encoder_lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        include_schema=args.include_schema,
        seed=args.seed,
        vocab_size=args.vocab_size,
        max_len=args.max_len,
        init_from=args.init_from,
    )
    result = train_mod.train(config, examples, args.out)
    print(f"artifact={result.artifact_dir}")
    print(f"examples={balance.total} positives={balance.positives}")
    print(f"final_train_accuracy={result.final_train_accuracy:.4f}")
    return 0


def cmd_serve(args) -> int:
    serve_mod.serve(args.model, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairscorer",
        description="Train and serve the (utterance, SQL) correctness scorer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a scorer on a labeled beamset")
    p.add_argument("--beams", required=True, help="labeled beamset JSONL")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.add_argument("--preset", choices=sorted(PRESETS), default="base")
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--classifier-lr", type=float, default=1e-3)
    p.add_argument("--encoder-lr", type=float, default=5e-6)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--include-schema", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab-size", type=int, default=2048)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--init-from", help="existing artifact to warm-start from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a trained artifact")
    p.add_argument("--model", required=True, help="artifact directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
