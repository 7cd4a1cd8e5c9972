"""Command-line interface: ``ringfit generate|train|evaluate|reproduce|estimate``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .cases import CASE_IDS
from .errors import RingfitError


def _scale(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("scale must be in (0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringfit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, case=True, scale=False):
        if case:
            p.add_argument("--case", type=int, choices=CASE_IDS, required=True)
        if scale:
            p.add_argument("--scale", type=_scale, default=1.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="JSON file overriding registry fields")

    common(sub.add_parser("generate", help="generate train/validation datasets"), scale=True)

    p = sub.add_parser("train", help="train encoder and decoder")
    common(p)
    p.add_argument("--dataset", required=True, help="training .rfds file")
    p.add_argument("--validation", help="optional validation .rfds for loss traces")

    p = sub.add_parser("evaluate", help="evaluate a model on a validation set")
    common(p, case=False)
    p.add_argument("--model", required=True)
    p.add_argument("--validation", required=True)

    common(sub.add_parser("reproduce", help="generate, train and evaluate one case"), scale=True)

    p = sub.add_parser("estimate", help="apply a trained model to waveforms in a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="CSV, one waveform per row")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        overrides = pipeline.load_config(getattr(args, "config", None))
        if args.command == "generate":
            t, v = pipeline.cmd_generate(args.case, args.scale, args.seed, args.out, overrides)
            print(f"wrote {t} and {v}")
        elif args.command == "train":
            path, _ = pipeline.cmd_train(
                args.case, args.dataset, args.seed, args.out, overrides, args.validation
            )
            print(f"wrote {path}")
        elif args.command == "evaluate":
            report = pipeline.cmd_evaluate(args.model, args.validation, args.out, seed=args.seed)
            print(pipeline.comparison_table(report))
        elif args.command == "reproduce":
            pipeline.cmd_reproduce(args.case, args.scale, args.seed, args.out, overrides)
        elif args.command == "estimate":
            est = pipeline.cmd_estimate(args.model, args.input, args.out)
            print(f"estimated {len(est)} waveform(s) into {args.out}")
    except (RingfitError, OSError) as exc:
        print(f"ringfit: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
