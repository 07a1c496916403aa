"""Command line interface.

Subcommands: ingest (validate a corpus), gen-corpus (synthetic corpus +
keyword file), run (experiment matrix), report (per-size precision
tables), summarize (cross-size deltas).

Exit codes: 0 success, 1 validation error, 2 completed with failed cells.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import config_from_file
from .corpus import load_corpus, richness
from .errors import SeedkitError, UndefinedRichnessError
from .harness import load_results, render_summary, run_experiment_matrix, summarize
from .keywords import build_index, hit_percentage, load_keywords
from .metrics import report_table, table_to_csv, table_to_text
from .synth import generate_synthetic, spec_from_file, write_corpus_jsonl, write_keywords
from .util import format_percent, write_json_atomic, write_text_atomic

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARTIAL = 2


def _cmd_ingest(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    labeled = [d for d in corpus if d.label is not None]
    print(f"corpus: {corpus.name}")
    print(f"documents: {len(corpus)} ({len(labeled)} labeled)")
    try:
        print(f"richness: {format_percent(richness(corpus))}")
    except UndefinedRichnessError:
        print("richness: undefined (no labeled documents)")
    if args.keywords:
        keyword_list = load_keywords(args.keywords)
        index = build_index(corpus, keyword_list)
        print(f"keywords: {len(keyword_list)}")
        print(f"keyword hit percentage: {format_percent(hit_percentage(index, len(corpus)))}")
    return EXIT_OK


def _cmd_gen_corpus(args) -> int:
    spec = spec_from_file(args.spec)
    corpus, keyword_list = generate_synthetic(spec)
    write_corpus_jsonl(corpus, args.out_corpus)
    write_keywords(keyword_list, args.out_keywords)
    print(f"wrote {len(corpus)} documents to {args.out_corpus}")
    print(f"wrote {len(keyword_list)} keywords to {args.out_keywords}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = config_from_file(args.config)
    results = run_experiment_matrix(config, args.out, workers=args.workers)
    failed = [r for r in results if not r.ok]
    print(f"completed {len(results)} cells, {len(failed)} failed")
    for r in failed:
        print(f"  FAILED rep {r.replicate} {r.strategy} @ {r.seed_size}: {r.error_type}: {r.error_message}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_report(args) -> int:
    results = load_results(args.results)
    ok = [r.metrics for r in results if r.ok]
    if not ok:
        print("no successful cells to report")
        return EXIT_VALIDATION
    replicates = sorted({m["replicate"] for m in ok})
    sizes = sorted({m["seed_size"] for m in ok})
    out_dir = Path(args.out) if args.out else None
    for replicate in replicates:
        rep_metrics = [m for m in ok if m["replicate"] == replicate]
        for size in sizes:
            table = report_table(rep_metrics, size)
            if not table:
                continue
            title = f"replicate {replicate}, seed size {size}"
            print(title)
            print(table_to_text(table), end="")
            print()
            if out_dir is not None:
                name = f"table_rep{replicate:03d}_size{size:05d}.csv"
                write_text_atomic(out_dir / name, table_to_csv(table))
    if out_dir is not None:
        print(f"tables written to {out_dir}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    summary = summarize(args.results)
    print(render_summary(summary), end="")
    if args.out:
        write_json_atomic(args.out, summary)
        print(f"summary written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedkit",
        description="Seed set selection strategies and precision-at-recall evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and describe a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--keywords", default=None, help="optional keyword file for hit stats")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus and keyword file")
    p.add_argument("--spec", required=True, help="SyntheticSpec JSON file")
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-keywords", required=True)
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("run", help="run the experiment matrix")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="render precision tables from a results directory")
    p.add_argument("--results", required=True)
    p.add_argument("--out", default=None, help="directory for CSV tables")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("summarize", help="cross-size summary of a results directory")
    p.add_argument("--results", required=True)
    p.add_argument("--out", default=None, help="optional JSON output path")
    p.set_defaults(func=_cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SeedkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
