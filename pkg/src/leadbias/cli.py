"""Command-line front end for the full pipeline.

Subcommands: perturb | precompute | train | eval. Every command is
deterministic given its inputs and --seed, and writes a manifest
(command, flags, input hashes, outputs, wall time) next to its primary
output. Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from .corpus import PERTURBATION_KINDS, Perturbation, load_jsonl, perturb_corpus, save_jsonl
from .evaluation import (
    bootstrap_significance,
    evaluate,
    lead3_selector,
    oracle_selector,
    partition_by_position,
    perturbation_matrix,
    policy_selector,
    subset,
    write_report,
)
from .oracle import load_cache, precompute_cache
from .trainer import emit_curve, load_checkpoint, load_config, save_checkpoint, train


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    return value


def _write_manifest(command: str, args: argparse.Namespace, inputs, outputs, started: float) -> None:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": command,
        "config": {k: _jsonable(v) for k, v in flags.items()},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.time() - started, 3),
    }
    manifest_path = Path(str(outputs[0]) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def cmd_perturb(args) -> int:
    started = time.time()
    corpus = load_jsonl(args.input)
    out = perturb_corpus(corpus, Perturbation(args.kind, args.seed))
    save_jsonl(out, args.out)
    _write_manifest("perturb", args, [args.input], [args.out], started)
    return 0


def cmd_precompute(args) -> int:
    started = time.time()
    corpus = load_jsonl(args.input)
    precompute_cache(corpus, args.out)
    _write_manifest("precompute", args, [args.input], [args.out], started)
    return 0


def cmd_train(args) -> int:
    started = time.time()
    corpus_train = load_jsonl(args.train)
    corpus_dev = load_jsonl(args.dev, split="dev")
    cache = load_cache(args.cache)
    cfg = load_config(args.config)
    state = train(corpus_train, corpus_dev, cache, cfg)
    save_checkpoint(state, args.out)
    curve_path = args.curve or Path(args.out).with_name(Path(args.out).stem + ".curve.csv")
    emit_curve(state, curve_path)
    _write_manifest(
        "train", args, [args.train, args.dev, args.cache, args.config], [args.out, curve_path], started
    )
    return 0


def _parse_matrix_entries(entries) -> dict[str, Path]:
    mapping: dict[str, Path] = {}
    for entry in entries:
        kind, sep, path = entry.partition("=")
        if not sep or kind not in PERTURBATION_KINDS:
            raise ValueError(f"--matrix expects kind=checkpoint with kind in {PERTURBATION_KINDS}, got {entry!r}")
        mapping[kind] = Path(path)
    missing = [k for k in PERTURBATION_KINDS if k not in mapping]
    if missing:
        raise ValueError(f"--matrix needs a checkpoint for every kind; missing {missing}")
    return mapping


def cmd_eval(args) -> int:
    started = time.time()
    corpus = load_jsonl(args.test, split="test")
    inputs = [args.test]

    cache = None
    if args.cache:
        cache = load_cache(args.cache)
        inputs.append(args.cache)

    selectors = {"lead3": lead3_selector}
    if cache is not None:
        selectors["oracle"] = oracle_selector(cache)
    for ckpt in args.checkpoint or []:
        params, _ = load_checkpoint(ckpt)
        selectors[Path(ckpt).stem] = policy_selector(params)
        inputs.append(ckpt)

    rouge_rows = {name: evaluate(selector, corpus) for name, selector in selectors.items()}

    matrix = None
    if args.matrix:
        checkpoints = _parse_matrix_entries(args.matrix)
        row_selectors = {}
        for kind, path in checkpoints.items():
            params, _ = load_checkpoint(path)
            row_selectors[kind] = policy_selector(params)
            inputs.append(path)
        matrix = perturbation_matrix(lambda kind: row_selectors[kind], corpus, seed=args.seed)

    partitions = None
    if args.partitions is not None:
        if cache is None:
            raise ValueError("--partitions requires --cache")
        split = partition_by_position(corpus, cache, k=args.partitions)
        partitions = {}
        for name, ids in (
            ("early", split.early_ids),
            ("med", split.med_ids),
            ("late", split.late_ids),
        ):
            sub = subset(corpus, ids)
            partitions[name] = {
                sel_name: evaluate(selector, sub).avg_rouge
                for sel_name, selector in selectors.items()
            }

    significance = {}
    for pair in args.compare or []:
        name_a, sep, name_b = pair.partition(",")
        if not sep or name_a not in rouge_rows or name_b not in rouge_rows:
            raise ValueError(
                f"--compare expects two evaluated selector names, got {pair!r} "
                f"(available: {sorted(rouge_rows)})"
            )
        significance[f"{name_a}_vs_{name_b}"] = bootstrap_significance(
            rouge_rows[name_a].per_doc_avg,
            rouge_rows[name_b].per_doc_avg,
            iterations=args.iterations,
            seed=args.seed,
        )

    write_report(
        args.report,
        rouge_rows=rouge_rows,
        matrix=matrix,
        partitions=partitions,
        significance=significance,
    )
    _write_manifest("eval", args, inputs, [args.report], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leadbias",
        description="Diagnose and counter lead bias in extractive summarization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="rewrite a corpus with a position perturbation")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--kind", required=True, choices=PERTURBATION_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("precompute", help="write the oracle cache for a corpus")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("train", help="train the policy and write checkpoint + curve")
    p.add_argument("--train", required=True, type=Path)
    p.add_argument("--dev", required=True, type=Path)
    p.add_argument("--cache", required=True, type=Path)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--curve", type=Path, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate selectors and write the report")
    p.add_argument("--test", required=True, type=Path)
    p.add_argument("--cache", type=Path, default=None)
    p.add_argument("--checkpoint", action="append", type=Path, default=None)
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--matrix", action="append", default=None, metavar="KIND=CHECKPOINT")
    p.add_argument("--partitions", type=int, default=None, metavar="K")
    p.add_argument("--compare", action="append", default=None, metavar="A,B")
    p.add_argument("--iterations", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failure -> exit 1 with a message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
