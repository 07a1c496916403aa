#!/usr/bin/env python3
"""Desk-scale strategy comparison on a generated corpus.

Generates a 20,000-document labeled corpus with informative keywords,
runs the full 8-strategy x 3-size matrix for the requested number of
replicates, then prints per-size precision tables and the cross-size
summary. Everything is deterministic in --seed.
"""

import argparse
import json
import time
from pathlib import Path

from seedkit.config import ExperimentConfig
from seedkit.harness import render_summary, run_experiment_matrix, summarize
from seedkit.learn import TrainConfig
from seedkit.metrics import report_table, table_to_text
from seedkit.synth import (
    SyntheticSpec,
    generate_synthetic,
    write_corpus_jsonl,
    write_keywords,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="desk_results", help="output directory")
    parser.add_argument("--n-docs", type=int, default=20_000)
    parser.add_argument("--richness", type=float, default=0.15)
    parser.add_argument("--replicates", type=int, default=10)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--corpus-seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print(f"generating corpus: {args.n_docs} docs, richness {args.richness}")
    corpus, keywords = generate_synthetic(
        SyntheticSpec(n_docs=args.n_docs, richness=args.richness, rng_seed=args.corpus_seed)
    )
    corpus_path = out / "corpus.jsonl"
    keywords_path = out / "keywords.txt"
    write_corpus_jsonl(corpus, corpus_path)
    write_keywords(keywords, keywords_path)

    config = ExperimentConfig(
        corpus_path=str(corpus_path),
        keywords_path=str(keywords_path),
        train=TrainConfig(max_epochs=2_000, tolerance=1e-9),
        replicates=args.replicates,
        rng_seed=args.seed,
    )
    results_dir = out / "results"
    start = time.time()
    results = run_experiment_matrix(config, results_dir, corpus=corpus, workers=args.workers)
    failed = [r for r in results if not r.ok]
    print(f"{len(results)} cells in {time.time() - start:.0f}s, {len(failed)} failed")

    ok = [r.metrics for r in results if r.ok]
    for replicate in sorted({m["replicate"] for m in ok})[:1]:
        rep_metrics = [m for m in ok if m["replicate"] == replicate]
        for size in sorted({m["seed_size"] for m in rep_metrics}):
            print(f"\nreplicate {replicate}, seed size {size}")
            print(table_to_text(report_table(rep_metrics, size)), end="")

    summary = summarize(results_dir)
    print()
    print(render_summary(summary), end="")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(f"\nresults in {results_dir}, summary in {out / 'summary.json'}")


if __name__ == "__main__":
    main()
