"""Extraction client command line.

`make-toy` writes a bundled toy dataset; `run` prompts the stub model over a
dataset file and emits records.  Plug a real model in programmatically via
the CausalLM protocol; the CLI's only built-in backend is the stub.
"""

from __future__ import annotations

import argparse
import sys

from icl_extractor.datasets import (
    load_dataset,
    make_toy_closed,
    make_toy_model,
    make_toy_open,
    save_dataset,
)
from icl_extractor.runner import ExtractionConfig, run_extraction


def cmd_make_toy(args) -> int:
    maker = make_toy_closed if args.kind == "closed_set" else make_toy_open
    save_dataset(maker(seed=args.seed), args.out)
    print(args.out)
    return 0


def cmd_run(args) -> int:
    dataset = load_dataset(args.dataset, name=args.task_id)
    model = make_toy_model(dataset.formulation, hidden_size=args.hidden)
    config = ExtractionConfig(
        k=args.k,
        n_prompts=args.prompts,
        seed=args.seed,
        max_tokens=args.max_tokens,
        with_embeddings=args.embeddings,
    )
    specs = run_extraction(model, dataset, config, args.out, args.prompts_out)
    print(args.out)
    print(
        f"prompts={len(specs)} k={config.k} test_examples="
        f"{len(dataset.split_ids('test'))}",
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icl-extract",
        description="Prompt a causal LM over a dataset and emit record files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-toy", help="write a bundled toy dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("closed_set", "open_ended"), default="closed_set")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_toy)

    p = sub.add_parser("run", help="extract records for a dataset's test split")
    p.add_argument("--dataset", required=True, help="toy dataset JSONL file")
    p.add_argument("--out", required=True, help="record file to write")
    p.add_argument("--task-id", default=None, help="override the task identifier")
    p.add_argument("--k", type=int, default=2, help="in-context examples per prompt")
    p.add_argument("--prompts", type=int, default=2, help="number of prompts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-tokens", type=int, default=8)
    p.add_argument("--embeddings", action="store_true", help="emit hidden states")
    p.add_argument("--hidden", type=int, default=8, help="stub hidden size")
    p.add_argument("--prompts-out", default=None, help="also dump the prompt specs")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
