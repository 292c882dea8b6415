"""Command-line entry points: training, suggestion, serving.

Exit codes: 0 success, 1 module/runtime error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, MODEL_CHOICES, canonical_json, load_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synex",
        description="Select example sentences that clarify confusing near-synonyms.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to engine config JSON")
        return p

    for name, help_text in (
        ("train-gmm", "train per-word mixture usage models"),
        ("train-bilstm", "train per-word BiLSTM usage models"),
    ):
        p = add(name, help_text)
        p.add_argument("--set", default=None, help="limit training to one confusion set id")

    add("train-filter", "train the dictionary-likeness sentence filter")
    add("train-align", "train the L1/L2 word alignment table")

    p = add("suggest", "rank and emit example sentences for a confusion set")
    p.add_argument("--set", required=True, help="confusion set id")
    p.add_argument("--model", default="gmm", choices=MODEL_CHOICES)
    p.add_argument("--k", type=int, default=None, help="examples per word (default from config)")
    p.add_argument(
        "--l1-grouped",
        action="store_true",
        default=None,
        help="restrict pools to sentences sharing a common L1 gloss",
    )
    p.add_argument("--out", default=None, help="write the suggestion JSON here instead of stdout")

    p = add("serve", "start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    from .engine import Engine  # deferred: numpy import cost only when needed

    engine = Engine(cfg)
    try:
        if args.command == "train-gmm":
            paths = engine.train_gmm(args.set)
            print(f"wrote {len(paths)} gmm model(s) under {engine.store_dir()}")
        elif args.command == "train-bilstm":
            paths = engine.train_bilstm(args.set)
            print(f"wrote {len(paths)} bilstm model(s) under {engine.store_dir()}")
        elif args.command == "train-filter":
            path = engine.train_filter()
            print(f"wrote {path}")
        elif args.command == "train-align":
            path = engine.train_align()
            print(f"wrote {path}")
        elif args.command == "suggest":
            result = engine.suggest(
                args.set, model_kind=args.model, k=args.k, l1_grouped=args.l1_grouped
            )
            payload = canonical_json(result.to_json()) + "\n"
            if args.out:
                Path(args.out).write_text(payload, encoding="utf-8")
            else:
                sys.stdout.write(payload)
        elif args.command == "serve":
            import uvicorn

            from .api import create_app

            uvicorn.run(create_app(cfg), host=args.host, port=args.port)
    except BrokenPipeError:
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
