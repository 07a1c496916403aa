"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The heavyweight experiment fixtures are session-scoped so the matrix runs
once and several criteria read from it. Run with `pytest -s` to see the
per-criterion lines as they complete.
"""

import hashlib
import time
from collections import defaultdict
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from seedkit.cluster import ClusterParams, build_tree
from seedkit.config import ExperimentConfig
from seedkit.corpus import Document, SplitSpec, richness, split
from seedkit.errors import DegenerateSeedError, InfeasibleSeedError, SizeError
from seedkit.harness import run_experiment_matrix
from seedkit.keywords import KeywordIndex, hit_percentage
from seedkit.learn import TrainConfig, loss_and_grad, train_matrix
from seedkit.metrics import ScoredSet, pr_curve, precision_at_recall
from seedkit.rng import make_rng, sample_without_replacement
from seedkit.selection import (
    SeedSpec,
    allocate_proportional,
    select_seed,
)
from seedkit.synth import (
    SyntheticSpec,
    generate_synthetic,
    write_corpus_jsonl,
    write_keywords,
)
from seedkit.textpipe import (
    SparseVector,
    VectorizerConfig,
    build_vocabulary,
    tokenize,
    vectorize_corpus,
)

P75_KEY = "0.75"


@contextmanager
def criterion(number, slug):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {number} ({slug}): FAIL ({time.perf_counter() - start:.1f}s)")
        raise
    print(f"[acceptance] criterion {number} ({slug}): PASS ({time.perf_counter() - start:.1f}s)")


def labeled_stub_docs(n_positive, n_total):
    return [
        Document(id=str(i), text="", label=1 if i < n_positive else 0)
        for i in range(n_total)
    ]


def hit_index(n_hits):
    return KeywordIndex(
        postings={}, points={str(i): 1 for i in range(n_hits)}, n_keywords=1
    )


def test_criterion_1_arithmetic_fidelity():
    from seedkit.util import format_percent

    richness_tables = [
        # (positives, total, expected 2-decimal percent)
        (46_730, 308_621, "15.14%"),
        (14_307, 393_745, "3.63%"),
        # the published figure for this row is 14.00%, but the raw counts
        # round to 13.98%; the exact arithmetic wins here
        (38_834, 277_745, "13.98%"),
        (159_304, 412_880, "38.58%"),
    ]
    hit_tables = [
        (193_017, 308_621, "62.54%"),
        (368_506, 393_745, "93.59%"),
        (159_900, 277_745, "57.57%"),
        (81_362, 412_880, "19.71%"),
    ]
    doc_sets = [(labeled_stub_docs(p, n), p, n, want) for p, n, want in richness_tables]
    indexes = [(hit_index(h), h, n, want) for h, n, want in hit_tables]

    with criterion(1, "arithmetic-fidelity"):
        start = time.perf_counter()
        for docs, p, n, want in doc_sets:
            ratio = richness(docs)
            assert ratio == Fraction(p, n)
            assert format_percent(ratio) == want, (p, n, want)
        for index, h, n, want in indexes:
            ratio = hit_percentage(index, n)
            assert ratio == Fraction(h, n)
            assert format_percent(ratio) == want, (h, n, want)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"operations took {elapsed:.2f}s"


@pytest.fixture(scope="session")
def determinism_runs(tmp_path_factory):
    """Two runs of one default-shaped config on one corpus (criteria 2, 7)."""
    root = tmp_path_factory.mktemp("det")
    corpus, keywords = generate_synthetic(
        SyntheticSpec(n_docs=6_000, richness=0.18, rng_seed=11)
    )
    corpus_path = root / "corpus.jsonl"
    keywords_path = root / "keywords.txt"
    write_corpus_jsonl(corpus, corpus_path)
    write_keywords(keywords, keywords_path)
    config = ExperimentConfig(
        corpus_path=str(corpus_path),
        keywords_path=str(keywords_path),
        rng_seed=404,
    )
    start = time.perf_counter()
    first = run_experiment_matrix(config, root / "run_a", corpus=corpus)
    second = run_experiment_matrix(config, root / "run_b", corpus=corpus)
    elapsed = time.perf_counter() - start
    return config, root, first, second, elapsed


def test_criterion_2_matrix_shape(determinism_runs):
    config, _, first, _, _ = determinism_runs
    with criterion(2, "matrix-shape"):
        assert len(first) == 24
        cells = {(r.strategy, r.seed_size) for r in first}
        assert len(cells) == 24
        assert {s for s, _ in cells} == set(config.strategies)
        assert {z for _, z in cells} == {500, 1000, 2000}
        assert all(r.ok for r in first)


def brute_force_curve(items):
    ranked = sorted(items, key=lambda it: (-it[1], it[0]))
    n_pos = sum(lbl for _, _, lbl in items)
    points = []
    for k in range(1, len(ranked) + 1):
        tp = sum(lbl for _, _, lbl in ranked[:k])
        points.append((k, tp / n_pos, tp / k))
    return points


def test_criterion_3_evaluator_oracle_equivalence():
    rng = make_rng(33)
    with criterion(3, "evaluator-oracle"):
        start = time.perf_counter()
        for trial in range(1_000):
            n = int(rng.integers(1, 201))
            scores = rng.random(n)
            if rng.random() < 0.5:  # force score ties
                scores = np.round(scores, 1)
            labels = (rng.random(n) < rng.uniform(0.05, 0.9)).astype(int)
            if labels.sum() == 0:
                labels[int(rng.integers(0, n))] = 1
            items = tuple(
                (f"d{i:04d}", float(s), int(l)) for i, (s, l) in enumerate(zip(scores, labels))
            )
            curve = pr_curve(ScoredSet(items))
            assert list(curve.points) == brute_force_curve(items)
            for level in (0.5, 0.75, 0.9):
                expected = next(p for _, r, p in brute_force_curve(items) if r >= level)
                assert precision_at_recall(curve, level) == expected
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"{elapsed:.1f}s"


def test_criterion_4_gradient_correctness():
    import scipy.sparse as sp

    rng = np.random.default_rng(44)
    with criterion(4, "gradient-correctness"):
        start = time.perf_counter()
        h = 1e-5
        probes = 0
        for trial in range(40):
            n = int(rng.integers(2, 12))
            d = int(rng.integers(2, 10))
            x = sp.random(n, d, density=0.6, random_state=int(rng.integers(1e6)), format="csr")
            y = (rng.random(n) < 0.5).astype(float)
            lam = float(rng.choice([0.0, 1e-4, 1e-2]))
            for _ in range(3):
                probes += 1
                w = rng.normal(scale=1.5, size=d)
                b = float(rng.normal())
                _, grad_w, grad_b = loss_and_grad(w, b, x, y, lam)
                for j in range(d):
                    e = np.zeros(d)
                    e[j] = h
                    lo, _, _ = loss_and_grad(w - e, b, x, y, lam)
                    hi, _, _ = loss_and_grad(w + e, b, x, y, lam)
                    fd = (hi - lo) / (2 * h)
                    assert abs(grad_w[j] - fd) <= 1e-5 * max(1.0, abs(fd))
                lo, _, _ = loss_and_grad(w, b - h, x, y, lam)
                hi, _, _ = loss_and_grad(w, b + h, x, y, lam)
                fd_b = (hi - lo) / (2 * h)
                assert abs(grad_b - fd_b) <= 1e-5 * max(1.0, abs(fd_b))
        assert probes >= 100
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"{elapsed:.1f}s"


def random_vectors(rng, n, dim):
    vectors = {}
    for i in range(n):
        dense = rng.random(dim) + 0.01
        dense /= dense.sum()
        vectors[f"d{i:05d}"] = SparseVector(
            tuple((j, float(w)) for j, w in enumerate(dense))
        )
    return vectors


def test_criterion_5_clustering_partition():
    with criterion(5, "clustering-partition"):
        start = time.perf_counter()
        for trial in range(50):
            rng = make_rng(500 + trial)
            n = int(rng.integers(30, 600))
            dim = int(rng.integers(8, 30))
            vectors = random_vectors(rng, n, dim)
            tree = build_tree(vectors, ClusterParams(rng_seed=trial))
            members = [d for leaf in tree.leaves for d in leaf.member_ids]
            assert len(members) == n
            assert set(members) == set(vectors)
            assert len(tree.leaves) <= 243
            if tree.fully_split:
                assert len(tree.leaves) == 243

        # full-scale build: 20,000 documents drawn from 243 hierarchically
        # nested blobs (3 groups per level, separations shrinking with
        # depth), so every node stays well above min_split_size
        rng = make_rng(999)
        n = 20_000
        scales = [16.0, 8.0, 4.0, 2.0, 1.0]
        vectors = {}
        for i in range(n):
            code = [int(rng.integers(0, 3)) for _ in range(5)]
            dense = np.full(18, 1e-3)
            for level, digit in enumerate(code):
                dense[3 * level + digit] += scales[level]
            dense[15:] += rng.random(3) * 0.05
            vectors[f"d{i:05d}"] = SparseVector(
                tuple((j, float(w)) for j, w in enumerate(dense))
            )
        tree = build_tree(vectors, ClusterParams(rng_seed=999))
        members = [d for leaf in tree.leaves for d in leaf.member_ids]
        assert len(members) == n and set(members) == set(vectors)
        assert tree.fully_split and len(tree.leaves) == 243
        elapsed = time.perf_counter() - start
        assert elapsed < 120.0, f"{elapsed:.1f}s"


def test_criterion_6_strategy_contracts():
    with criterion(6, "strategy-contracts"):
        start = time.perf_counter()
        for trial in range(100):
            rng = make_rng(6_000 + trial)
            n = int(rng.integers(20, 501))
            pool = tuple(f"d{i:04d}" for i in range(n))

            n_keywords = int(rng.integers(1, 12))
            postings = {}
            points = defaultdict(int)
            for i in range(n_keywords):
                size = int(rng.integers(0, max(1, n // 2)))
                posting = frozenset(sample_without_replacement(pool, size, rng))
                postings[f"k{i}"] = posting
                for d in posting:
                    points[d] += 1
            index = KeywordIndex(
                postings=postings, points=dict(points), n_keywords=n_keywords
            )

            vec_rng = make_rng(7_000 + trial)
            dense = vec_rng.random((n, 6)) + 0.01
            dense /= dense.sum(axis=1, keepdims=True)
            vectors = {
                pool[i]: SparseVector(tuple((j, float(w)) for j, w in enumerate(dense[i])))
                for i in range(n)
            }
            tree = build_tree(vectors, ClusterParams(depth=2, rng_seed=trial))

            size = int(rng.integers(1, n + 1))
            for strategy in (
                "random_sample",
                "stratified_keyword",
                "stratified_keyword_weighted",
                "keyword_model_top_scoring",
                "keyword_model_stratified",
                "weighted_keyword_model_stratified",
                "clustering",
                "clustering_weighted",
            ):
                spec = SeedSpec(strategy, size, rng_seed=trial)
                try:
                    seed = select_seed(pool, spec, index=index, tree=tree)
                except (InfeasibleSeedError, SizeError):
                    continue
                ids = seed.id_set()
                assert len(seed) == size and len(ids) == size
                assert ids <= set(pool)

                if strategy == "stratified_keyword":
                    nonempty = [k for k, p in postings.items() if p]
                    if size >= len(nonempty):
                        for k in nonempty:
                            assert postings[k] & ids, k
                if strategy == "keyword_model_top_scoring":
                    inside = min(points.get(d, 0) for d in ids)
                    outside = max(
                        (points.get(d, 0) for d in pool if d not in ids), default=0
                    )
                    assert inside >= outside

            sizes = [len(p) for p in postings.values()]
            if any(sizes):
                total = int(rng.integers(1, sum(sizes) + 1))
                quotas = allocate_proportional(sizes, total)
                assert sum(quotas) == total
                assert all(0 <= q <= s for q, s in zip(quotas, sizes))
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"{elapsed:.1f}s"


def test_criterion_7_determinism(determinism_runs):
    _, root, first, second, elapsed = determinism_runs
    with criterion(7, f"determinism, two runs took {elapsed:.0f}s"):
        paths_a = sorted((root / "run_a").glob("rep*/*/metrics.json"))
        paths_b = sorted((root / "run_b").glob("rep*/*/metrics.json"))
        assert len(paths_a) == 24 and len(paths_b) == 24
        for pa, pb in zip(paths_a, paths_b):
            assert pa.relative_to(root / "run_a") == pb.relative_to(root / "run_b")
            ha = hashlib.sha256(pa.read_bytes()).hexdigest()
            hb = hashlib.sha256(pb.read_bytes()).hexdigest()
            assert ha == hb, pa.name
        assert elapsed < 1_800.0


@pytest.fixture(scope="session")
def desk_scale_matrix(tmp_path_factory):
    """The qualitative-reproduction experiment: 24 cells x 10 replicates on
    a 20,000-document synthetic corpus with informative keywords."""
    root = tmp_path_factory.mktemp("desk")
    corpus, keywords = generate_synthetic(
        SyntheticSpec(n_docs=20_000, richness=0.15, rng_seed=7)
    )
    corpus_path = root / "corpus.jsonl"
    keywords_path = root / "keywords.txt"
    write_corpus_jsonl(corpus, corpus_path)
    write_keywords(keywords, keywords_path)
    config = ExperimentConfig(
        corpus_path=str(corpus_path),
        keywords_path=str(keywords_path),
        train=TrainConfig(max_epochs=2_000, tolerance=1e-9),
        replicates=10,
        rng_seed=2026,
    )
    start = time.perf_counter()
    results = run_experiment_matrix(config, root / "results", corpus=corpus)
    elapsed = time.perf_counter() - start
    return config, results, elapsed


def test_criterion_8_qualitative_reproduction(desk_scale_matrix):
    config, results, elapsed = desk_scale_matrix
    strategies = list(config.strategies)
    sizes = (500, 1000, 2000)
    reps = range(config.replicates)

    p75 = {}
    seed_rich = {}
    pool_rich = {}
    for r in results:
        assert r.ok, (r.strategy, r.seed_size, r.replicate, r.error_message)
        p75[(r.strategy, r.seed_size, r.replicate)] = float(
            r.metrics["precision_at"][P75_KEY]
        )
        seed_rich[(r.strategy, r.seed_size, r.replicate)] = r.metrics["seed_richness"]
        pool_rich[r.replicate] = r.metrics["pool_richness"]

    with criterion(8, f"qualitative-reproduction, matrix took {elapsed:.0f}s"):
        assert len(results) == 24 * 10

        # (a) the best strategy at 2,000 beats the best at 500 in the mean,
        # winning in at least 8 of 10 replicates
        mean = lambda s, z: float(np.mean([p75[(s, z, r)] for r in reps]))
        best500 = max(strategies, key=lambda s: mean(s, 500))
        best2000 = max(strategies, key=lambda s: mean(s, 2000))
        margin = mean(best2000, 2000) - mean(best500, 500)
        wins = sum(
            p75[(best2000, 2000, r)] > p75[(best500, 500, r)] for r in reps
        )
        assert margin > 0, (best500, best2000, margin)
        assert wins >= 8, wins

        # (b) greedy keyword scoring is the worst strategy, replicate by
        # replicate, on mean precision across the three seed sizes
        last = 0
        for r in reps:
            by_strategy = {
                s: float(np.mean([p75[(s, z, r)] for z in sizes])) for s in strategies
            }
            worst = min(by_strategy, key=by_strategy.get)
            last += worst == "keyword_model_top_scoring"
        assert last >= 8, last

        # (c) its seed is always richer than the pool it was drawn from
        for r in reps:
            for z in sizes:
                assert (
                    seed_rich[("keyword_model_top_scoring", z, r)] > pool_rich[r]
                ), (z, r)

        assert elapsed < 900.0, f"matrix took {elapsed:.0f}s"


def test_criterion_9_low_richness_behavior():
    with criterion(9, "low-richness"):
        start = time.perf_counter()
        corpus, _ = generate_synthetic(
            SyntheticSpec(n_docs=20_000, richness=0.036, rng_seed=13)
        )
        parts = split(corpus, SplitSpec(0.10, rng_seed=1))
        pool_docs = corpus.subset(parts.selection_pool)
        cache = {d.id: tokenize(d.text) for d in pool_docs}
        vocab = build_vocabulary(pool_docs, VectorizerConfig(), token_cache=cache)
        vc = vectorize_corpus(pool_docs, vocab, token_cache=cache)
        labels = np.asarray([d.label for d in pool_docs], dtype=float)
        pool_ids = tuple(d.id for d in pool_docs)
        cfg = TrainConfig(max_epochs=50)

        positives_at_500 = []
        degenerate_seen = 0
        for seed in range(50):
            big = select_seed(pool_ids, SeedSpec("random_sample", 500, seed))
            rows = vc.rows_of(big.doc_ids)
            n_pos = int(labels[rows].sum())
            positives_at_500.append(n_pos)
            single_class = n_pos in (0, 500)
            try:
                train_matrix(vc.matrix[rows], labels[rows], cfg)
                assert not single_class
            except DegenerateSeedError:
                assert single_class
                degenerate_seen += 1

            # small seeds make single-class draws routine; the trainer must
            # refuse them with the typed error every time
            small = select_seed(pool_ids, SeedSpec("random_sample", 25, 10_000 + seed))
            rows = vc.rows_of(small.doc_ids)
            n_pos = int(labels[rows].sum())
            single_class = n_pos in (0, 25)
            try:
                train_matrix(vc.matrix[rows], labels[rows], cfg)
                assert not single_class
            except DegenerateSeedError as exc:
                assert single_class
                assert exc.missing_class in ("positive", "negative")
                degenerate_seen += 1

        mean_pos = float(np.mean(positives_at_500))
        assert abs(mean_pos - 18.0) < 2.5, mean_pos
        assert degenerate_seen >= 1
        elapsed = time.perf_counter() - start
        assert elapsed < 120.0, f"{elapsed:.1f}s"
