"""Experiment orchestration: the strategy x size x replicate matrix.

Per replicate the corpus is split once (the test set stays static across
every strategy and size), the vocabulary, keyword index, and cluster tree
are built once from the selection pool, and then each (strategy, size)
cell selects a seed, trains a model, scores the test population, and
evaluates precision at the configured recall levels.

Every cell writes its own directory: config echo, seed CSV, model dump,
curve CSV, and a metrics JSON that is byte-identical across re-runs of
the same config (timings live in a separate file). Cells that fail with
a typed toolkit error are recorded and never stop the matrix.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import cluster as cluster_mod
from . import keywords as keywords_mod
from .config import ExperimentConfig
from .corpus import LabeledCorpus, SplitSpec, load_corpus, richness, split
from .errors import SeedkitError, ValidationError
from .learn import Model, dump_model, score_matrix, train_matrix
from .metrics import PRCurve, ScoredSet, curve_to_csv, pr_curve, precision_at_recall
from .rng import derive_seed
from .selection import SeedSpec, seed_to_csv, select_seed
from .textpipe import build_vocabulary, tokenize, vectorize_corpus
from .util import write_json_atomic, write_text_atomic

_CLUSTER_STRATEGIES = {"clustering", "clustering_weighted"}
_KEYWORD_STRATEGIES = {
    "stratified_keyword",
    "stratified_keyword_weighted",
    "keyword_model_top_scoring",
    "keyword_model_stratified",
    "weighted_keyword_model_stratified",
}


@dataclass
class CellResult:
    strategy: str
    seed_size: int
    replicate: int
    ok: bool
    metrics: dict | None
    error_type: str | None = None
    error_message: str | None = None
    cell_dir: Path | None = None


def _ids_sha256(ids: Iterable[str]) -> str:
    h = hashlib.sha256()
    for doc_id in sorted(ids):
        h.update(doc_id.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def cell_dir_name(strategy: str, size: int) -> str:
    return f"{strategy}_{size:05d}"


@dataclass
class _ReplicateContext:
    """Shared immutable inputs for every cell of one replicate."""

    replicate: int
    split_seed: int
    pool_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    test_set_sha256: str
    vocab: object
    vc_pool: object
    vc_test: object
    test_labels: np.ndarray
    pool_richness: float
    vc_pool_labels: np.ndarray
    index: object | None
    keywords_error: str | None
    tree: object | None
    config: ExperimentConfig


def _run_cell(ctx: _ReplicateContext, strategy: str, size: int, out_dir: Path) -> CellResult:
    cfg = ctx.config
    cell_dir = out_dir / f"rep{ctx.replicate:03d}" / cell_dir_name(strategy, size)
    cell_seed = derive_seed(cfg.rng_seed, strategy, size, ctx.replicate)
    timings: dict[str, float] = {}

    write_json_atomic(
        cell_dir / "config.json",
        {
            "strategy": strategy,
            "seed_size": size,
            "replicate": ctx.replicate,
            "cell_rng_seed": cell_seed,
            "split_seed": ctx.split_seed,
            "experiment": cfg.to_dict(),
        },
    )

    def fail(exc: SeedkitError) -> CellResult:
        write_json_atomic(
            cell_dir / "error.json",
            {"error_type": type(exc).__name__, "message": str(exc)},
        )
        return CellResult(
            strategy=strategy,
            seed_size=size,
            replicate=ctx.replicate,
            ok=False,
            metrics=None,
            error_type=type(exc).__name__,
            error_message=str(exc),
            cell_dir=cell_dir,
        )

    try:
        if strategy in _KEYWORD_STRATEGIES and ctx.index is None:
            raise ValidationError(
                f"keyword index unavailable: {ctx.keywords_error or 'no keyword file configured'}"
            )
        t0 = time.perf_counter()
        seed = select_seed(
            ctx.pool_ids,
            SeedSpec(strategy=strategy, size=size, rng_seed=cell_seed),
            index=ctx.index,
            tree=ctx.tree,
        )
        timings["select_s"] = time.perf_counter() - t0

        rows = ctx.vc_pool.rows_of(seed.doc_ids)
        x_seed = ctx.vc_pool.matrix[rows]
        y_seed = ctx.vc_pool_labels[rows].astype(float)

        t0 = time.perf_counter()
        model: Model = train_matrix(x_seed, y_seed, cfg.train)
        timings["train_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        scores = score_matrix(model, ctx.vc_test.matrix)
        scored = ScoredSet(
            tuple(
                (doc_id, float(s), int(label))
                for doc_id, s, label in zip(ctx.test_ids, scores, ctx.test_labels)
            )
        )
        curve: PRCurve = pr_curve(scored)
        precision = {repr(level): precision_at_recall(curve, level) for level in cfg.recall_levels}
        timings["score_eval_s"] = time.perf_counter() - t0

        seed_positive = int(y_seed.sum())
        metrics = {
            "schema": "seedkit-metrics-v1",
            "strategy": strategy,
            "seed_size": size,
            "replicate": ctx.replicate,
            "cell_rng_seed": cell_seed,
            "split_seed": ctx.split_seed,
            "test_set_sha256": ctx.test_set_sha256,
            "seed_set_sha256": _ids_sha256(seed.doc_ids),
            "n_pool": len(ctx.pool_ids),
            "n_test": len(ctx.test_ids),
            "n_test_positive": int(ctx.test_labels.sum()),
            "pool_richness": ctx.pool_richness,
            "seed_positive_count": seed_positive,
            "seed_richness": seed_positive / size,
            "train_meta": {
                "epochs_run": model.train_meta.epochs_run,
                "final_loss": model.train_meta.final_loss,
                "n_examples": model.train_meta.n_examples,
                "n_positive": model.train_meta.n_positive,
            },
            "train_config": {
                "l2_lambda": cfg.train.l2_lambda,
                "max_epochs": cfg.train.max_epochs,
                "tolerance": cfg.train.tolerance,
                "fit_intercept": cfg.train.fit_intercept,
            },
            "precision_at": precision,
            "curve_file": "curve.csv",
        }

        write_text_atomic(cell_dir / "seed.csv", seed_to_csv(seed, strategy, cell_seed))
        write_text_atomic(cell_dir / "model.json", dump_model(model, ctx.vocab))
        write_text_atomic(cell_dir / "curve.csv", curve_to_csv(curve))
        write_json_atomic(cell_dir / "metrics.json", metrics)
        write_json_atomic(cell_dir / "timings.json", timings)
        return CellResult(
            strategy=strategy,
            seed_size=size,
            replicate=ctx.replicate,
            ok=True,
            metrics=metrics,
            cell_dir=cell_dir,
        )
    except SeedkitError as exc:
        return fail(exc)


def _build_replicate_context(
    config: ExperimentConfig,
    corpus: LabeledCorpus,
    keyword_list,
    keywords_error: str | None,
    token_cache: dict[str, list[str]],
    replicate: int,
) -> _ReplicateContext:
    split_seed = (
        config.split.rng_seed
        if config.split.rng_seed is not None
        else derive_seed(config.rng_seed, "split", replicate)
    )
    parts = split(corpus, SplitSpec(config.split.test_fraction, split_seed))
    pool_docs = corpus.subset(parts.selection_pool)
    test_docs = corpus.subset(parts.test_set)

    labeled_pool = [d for d in pool_docs if d.label is not None]
    labeled_test = [d for d in test_docs if d.label is not None]
    if not labeled_pool or not labeled_test:
        raise ValidationError("both split halves need labeled documents")

    vocab = build_vocabulary(pool_docs, config.vectorizer, token_cache=token_cache)
    vc_pool = vectorize_corpus(labeled_pool, vocab, token_cache=token_cache)
    vc_test = vectorize_corpus(labeled_test, vocab, token_cache=token_cache)

    index = None
    if keyword_list is not None:
        index = keywords_mod.build_index(labeled_pool, keyword_list, token_cache=token_cache)

    tree = None
    if _CLUSTER_STRATEGIES & set(config.strategies):
        cluster_seed = (
            config.cluster.rng_seed
            if config.cluster.rng_seed is not None
            else derive_seed(config.rng_seed, "cluster", replicate)
        )
        params = cluster_mod.ClusterParams(
            branching=config.cluster.branching,
            depth=config.cluster.depth,
            max_iterations=config.cluster.max_iterations,
            convergence_tol=config.cluster.convergence_tol,
            rng_seed=cluster_seed,
            min_split_size=config.cluster.min_split_size,
        )
        tree = cluster_mod.build_tree(vc_pool, params)

    return _ReplicateContext(
        replicate=replicate,
        split_seed=split_seed,
        pool_ids=tuple(d.id for d in labeled_pool),
        test_ids=tuple(d.id for d in labeled_test),
        test_set_sha256=_ids_sha256(d.id for d in labeled_test),
        vocab=vocab,
        vc_pool=vc_pool,
        vc_test=vc_test,
        test_labels=np.asarray([d.label for d in labeled_test], dtype=int),
        pool_richness=float(richness(labeled_pool)),
        vc_pool_labels=np.asarray([d.label for d in labeled_pool], dtype=int),
        index=index,
        keywords_error=keywords_error,
        tree=tree,
        config=config,
    )


def run_experiment_matrix(
    config: ExperimentConfig,
    output_dir: str | Path,
    corpus: LabeledCorpus | None = None,
    workers: int = 1,
) -> list[CellResult]:
    """Run every (strategy, size, replicate) cell, streaming results to disk.

    Returns one CellResult per cell; failed cells carry their typed error
    instead of metrics.
    """
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json_atomic(out_dir / "run_config.json", config.to_dict())

    if corpus is None:
        corpus = load_corpus(config.corpus_path, config.corpus_format)

    keyword_list = None
    keywords_error: str | None = None
    if config.keywords_path is not None:
        try:
            keyword_list = keywords_mod.load_keywords(config.keywords_path)
        except (SeedkitError, OSError) as exc:
            keywords_error = str(exc)
    else:
        keywords_error = "no keyword file configured"

    token_cache = {doc.id: tokenize(doc.text) for doc in corpus}

    results: list[CellResult] = []
    for replicate in range(config.replicates):
        ctx = _build_replicate_context(
            config, corpus, keyword_list, keywords_error, token_cache, replicate
        )
        cells = [(s, size) for size in config.seed_sizes for s in config.strategies]
        if workers > 1:
            results.extend(_run_cells_parallel(ctx, cells, out_dir, workers))
        else:
            for strategy, size in cells:
                results.append(_run_cell(ctx, strategy, size, out_dir))

    # test-set constancy: every successful cell of a replicate saw one test set
    by_rep: dict[int, set[str]] = {}
    for r in results:
        if r.ok:
            by_rep.setdefault(r.replicate, set()).add(r.metrics["test_set_sha256"])
    for rep, hashes in by_rep.items():
        if len(hashes) != 1:
            raise AssertionError(f"replicate {rep} scored multiple test sets: {hashes}")
    return results


def _run_cells_parallel(
    ctx: _ReplicateContext, cells: list[tuple[str, int]], out_dir: Path, workers: int
) -> list[CellResult]:
    import multiprocessing as mp

    mp_ctx = mp.get_context("fork")
    global _FORK_CTX
    _FORK_CTX = (ctx, out_dir)
    try:
        with mp_ctx.Pool(processes=workers) as pool:
            return pool.map(_run_cell_forked, cells)
    finally:
        _FORK_CTX = None


_FORK_CTX = None


def _run_cell_forked(cell: tuple[str, int]) -> CellResult:
    ctx, out_dir = _FORK_CTX
    return _run_cell(ctx, cell[0], cell[1], out_dir)


def load_results(results_dir: str | Path) -> list[CellResult]:
    """Reload cell results (metrics or errors) from a results directory."""
    results = []
    for metrics_path in sorted(Path(results_dir).glob("rep*/*/metrics.json")):
        with open(metrics_path, encoding="utf-8") as f:
            metrics = json.load(f)
        results.append(
            CellResult(
                strategy=metrics["strategy"],
                seed_size=metrics["seed_size"],
                replicate=metrics["replicate"],
                ok=True,
                metrics=metrics,
                cell_dir=metrics_path.parent,
            )
        )
    for error_path in sorted(Path(results_dir).glob("rep*/*/error.json")):
        with open(error_path, encoding="utf-8") as f:
            error = json.load(f)
        with open(error_path.parent / "config.json", encoding="utf-8") as f:
            cell_cfg = json.load(f)
        results.append(
            CellResult(
                strategy=cell_cfg["strategy"],
                seed_size=cell_cfg["seed_size"],
                replicate=cell_cfg["replicate"],
                ok=False,
                metrics=None,
                error_type=error["error_type"],
                error_message=error["message"],
                cell_dir=error_path.parent,
            )
        )
    if not results:
        raise ValidationError(f"no results found under {results_dir}")
    return results


def summarize(results_dir: str | Path, sort_level: float = 0.75) -> dict:
    """Cross-size summary: per-strategy best size and best-vs-best deltas.

    For each recall level, reports the best mean precision at the largest
    configured seed size minus the best at the smallest, mirroring the
    size-effect comparison of the experiment protocol. Missing or failed
    cells are listed as gaps, not failures.
    """
    results = load_results(results_dir)
    ok = [r for r in results if r.ok]
    gaps = sorted(
        {
            (r.strategy, r.seed_size, r.replicate, r.error_type or "missing")
            for r in results
            if not r.ok
        }
    )

    levels: list[str] = []
    for r in ok:
        for key in r.metrics["precision_at"]:
            if key not in levels:
                levels.append(key)

    by_cell: dict[tuple[str, int], list[dict]] = {}
    for r in ok:
        by_cell.setdefault((r.strategy, r.seed_size), []).append(r.metrics)

    mean_precision: dict[tuple[str, int], dict[str, float]] = {}
    for (strategy, size), cell_metrics in by_cell.items():
        mean_precision[(strategy, size)] = {
            level: float(np.mean([m["precision_at"][level] for m in cell_metrics]))
            for level in levels
        }

    sizes = sorted({size for _, size in mean_precision})
    sort_key = None
    for key in levels:
        if float(key) == sort_level:
            sort_key = key
    if sort_key is None and levels:
        sort_key = levels[0]

    best_size_by_strategy = {}
    for strategy in sorted({s for s, _ in mean_precision}):
        candidates = [
            (size, mean_precision[(strategy, size)].get(sort_key, float("nan")))
            for size in sizes
            if (strategy, size) in mean_precision
        ]
        best = max(candidates, key=lambda c: c[1])
        best_size_by_strategy[strategy] = {"size": best[0], "precision": best[1]}

    deltas = {}
    if len(sizes) >= 2:
        small, large = sizes[0], sizes[-1]
        for level in levels:
            small_cells = {
                s: p[level] for (s, size), p in mean_precision.items() if size == small
            }
            large_cells = {
                s: p[level] for (s, size), p in mean_precision.items() if size == large
            }
            if not small_cells or not large_cells:
                continue
            best_small = max(small_cells.items(), key=lambda kv: (kv[1], kv[0]))
            best_large = max(large_cells.items(), key=lambda kv: (kv[1], kv[0]))
            deltas[level] = {
                "small_size": small,
                "large_size": large,
                "best_small_strategy": best_small[0],
                "best_small_precision": best_small[1],
                "best_large_strategy": best_large[0],
                "best_large_precision": best_large[1],
                "delta": best_large[1] - best_small[1],
            }

    return {
        "n_cells": len(results),
        "n_failed": len(results) - len(ok),
        "seed_sizes": sizes,
        "recall_levels": levels,
        "best_size_by_strategy": best_size_by_strategy,
        "size_effect_deltas": deltas,
        "gaps": [list(g) for g in gaps],
    }


def render_summary(summary: dict) -> str:
    """Human-readable rendering of summarize() output."""
    from .util import format_percent

    lines = [
        f"cells: {summary['n_cells']} ({summary['n_failed']} failed)",
        "",
        "best seed size per strategy:",
    ]
    for strategy, best in summary["best_size_by_strategy"].items():
        lines.append(
            f"  {strategy}: size {best['size']} ({format_percent(best['precision'])})"
        )
    if summary["size_effect_deltas"]:
        lines.append("")
        lines.append("best-vs-best precision delta (largest minus smallest seed size):")
        for level, d in summary["size_effect_deltas"].items():
            lines.append(
                f"  recall {float(level):.0%}: {format_percent(d['best_large_precision'])}"
                f" ({d['best_large_strategy']} @ {d['large_size']}) -"
                f" {format_percent(d['best_small_precision'])}"
                f" ({d['best_small_strategy']} @ {d['small_size']})"
                f" = {format_percent(d['delta'])}"
            )
    else:
        lines.append("")
        lines.append("size-effect deltas: not computable (single seed size present)")
    if summary["gaps"]:
        lines.append("")
        lines.append("gaps (failed or missing cells):")
        for strategy, size, replicate, reason in summary["gaps"]:
            lines.append(f"  rep {replicate} {strategy} @ {size}: {reason}")
    return "\n".join(lines) + "\n"
