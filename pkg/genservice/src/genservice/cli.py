"""Command-line entry points: serve the HTTP service or fine-tune."""

import argparse
import logging
import sys

from .app import ServiceConfig, serve
from .model import Hyperparams, finetune


def build_parser():
    parser = argparse.ArgumentParser(prog="genservice")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the generation HTTP service")
    p.add_argument("--mode", default="template",
                   choices=("echo", "template", "model"))
    p.add_argument("--checkpoint", default=None,
                   help="checkpoint path (model mode)")
    p.add_argument("--port", type=int, default=8300)
    p.add_argument("--max-batch", type=int, default=64)
    p.add_argument("--max-input-tokens", type=int, default=512)

    p = sub.add_parser("finetune", help="train a toy model on pipeline pairs")
    p.add_argument("--pairs", required=True, help="training pairs JSONL")
    p.add_argument("--role", required=True, choices=("prompter", "qg"))
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=3e-5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--early-stop-patience", type=int, default=10)
    p.add_argument("--warmup-steps", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        config = ServiceConfig(
            mode=args.mode, checkpoint=args.checkpoint, port=args.port,
            max_batch=args.max_batch, max_input_tokens=args.max_input_tokens,
        )
        serve(config)
        return 0
    hp = Hyperparams(
        epochs=args.epochs, learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        early_stop_patience=args.early_stop_patience,
        warmup_steps=args.warmup_steps, seed=args.seed,
    )
    summary = finetune(args.pairs, args.role, hp, args.out)
    print(f"epochs={summary['epochs_run']} best_loss={summary['best']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
