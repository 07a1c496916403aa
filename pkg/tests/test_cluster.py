import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seedkit.cluster import ClusterParams, build_tree, dump_tree_jsonl, leaf_assignment
from seedkit.errors import ValidationError
from seedkit.rng import make_rng
from seedkit.textpipe import SparseVector, Vocabulary


def sv(dense):
    return SparseVector(
        tuple((i, float(w)) for i, w in enumerate(dense) if w > 0)
    )


def dense_of(vec, dim):
    out = np.zeros(dim)
    for col, w in vec.entries:
        out[col] = w
    return out


def partition_sse(points, labels, k):
    sse = 0.0
    for c in range(k):
        members = points[np.asarray(labels) == c]
        if len(members):
            centroid = members.mean(axis=0)
            sse += ((members - centroid) ** 2).sum()
    return sse


def brute_force_best_3_partition(points):
    """Exhaustive minimum-SSE 3-partition (only viable for ~9 points)."""
    n = len(points)
    best = None
    best_sse = np.inf
    for labels in itertools.product(range(3), repeat=n):
        if len(set(labels)) != 3:
            continue
        sse = partition_sse(points, labels, 3)
        if sse < best_sse:
            best_sse = sse
            best = labels
    return best, best_sse


def blob_vectors(rng, centers, per_blob, spread, dim):
    vectors = {}
    blob_of = {}
    for b, center in enumerate(centers):
        for j in range(per_blob):
            noise = rng.normal(0, spread, size=dim)
            dense = np.clip(np.asarray(center) + noise, 0.001, None)
            dense /= dense.sum()
            doc_id = f"b{b}x{j:03d}"
            vectors[doc_id] = sv(dense)
            blob_of[doc_id] = b
    return vectors, blob_of


class TestKMeansSplit:
    def test_nine_points_match_exhaustive_optimum(self):
        # 3 blobs of 3 in 4 dims; brute force over all 3-partitions
        rng = make_rng(5)
        centers = [
            [0.7, 0.1, 0.1, 0.1],
            [0.1, 0.7, 0.1, 0.1],
            [0.1, 0.1, 0.7, 0.1],
        ]
        vectors, _ = blob_vectors(rng, centers, per_blob=3, spread=0.02, dim=4)
        points = np.array([dense_of(vectors[d], 4) for d in vectors])
        best_labels, best_sse = brute_force_best_3_partition(points)

        tree = build_tree(vectors, ClusterParams(branching=3, depth=1, rng_seed=1, min_split_size=3))
        assert len(tree.leaves) == 3
        ids = list(vectors)
        tree_groups = {
            frozenset(leaf.member_ids) for leaf in tree.leaves
        }
        oracle_groups = {
            frozenset(ids[i] for i in range(9) if best_labels[i] == c) for c in range(3)
        }
        assert tree_groups == oracle_groups
        # and the k-means partition attains the exhaustive optimum SSE
        label_of = leaf_assignment(tree)
        sse = partition_sse(points, [label_of[d] for d in ids], 3)
        assert sse == pytest.approx(best_sse, rel=1e-9)

    def test_thirty_points_recover_blobs(self):
        rng = make_rng(9)
        centers = [
            [0.8, 0.05, 0.05, 0.05, 0.05],
            [0.05, 0.8, 0.05, 0.05, 0.05],
            [0.05, 0.05, 0.8, 0.05, 0.05],
        ]
        vectors, blob_of = blob_vectors(rng, centers, per_blob=10, spread=0.01, dim=5)
        tree = build_tree(vectors, ClusterParams(branching=3, depth=1, rng_seed=3))
        assert len(tree.leaves) == 3
        for leaf in tree.leaves:
            blobs = {blob_of[d] for d in leaf.member_ids}
            assert len(blobs) == 1
            assert len(leaf.member_ids) == 10

    def test_single_document(self):
        tree = build_tree({"only": sv([1.0])}, ClusterParams(rng_seed=0))
        assert len(tree.leaves) == 1
        assert tree.leaves[0].member_ids == ("only",)
        assert not tree.fully_split

    def test_all_identical_vectors_become_single_leaf(self):
        vectors = {f"d{i}": sv([0.5, 0.5]) for i in range(20)}
        tree = build_tree(vectors, ClusterParams(branching=3, depth=2, rng_seed=0))
        assert len(tree.leaves) == 1
        assert not tree.fully_split

    def test_identical_vectors_share_a_leaf(self):
        rng = make_rng(2)
        vectors, _ = blob_vectors(
            rng,
            [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]],
            per_blob=3,
            spread=0.01,
            dim=3,
        )
        dup = vectors["b0x000"]
        vectors["dupa"] = dup
        vectors["dupb"] = dup
        tree = build_tree(vectors, ClusterParams(branching=3, depth=2, rng_seed=4))
        label_of = leaf_assignment(tree)
        assert label_of["dupa"] == label_of["dupb"]

    def test_min_split_size_stops_splitting(self):
        vectors = {f"d{i}": sv([1.0 if i % 2 else 0.0, 0.0 if i % 2 else 1.0]) for i in range(4)}
        tree = build_tree(
            vectors, ClusterParams(branching=2, depth=3, min_split_size=10, rng_seed=0)
        )
        assert len(tree.leaves) == 1
        assert not tree.fully_split


class TestTreeShape:
    def test_full_depth_leaf_count(self):
        # plenty of well-spread points: every node splits to depth 3
        rng = make_rng(11)
        dim = 12
        vectors = {}
        for i in range(600):
            dense = rng.random(dim) + 0.01
            dense /= dense.sum()
            vectors[f"d{i:04d}"] = sv(dense)
        params = ClusterParams(branching=3, depth=3, rng_seed=7)
        tree = build_tree(vectors, params)
        assert tree.fully_split
        assert len(tree.leaves) == 3**3

    def test_branching_depth_validation(self):
        with pytest.raises(ValidationError):
            ClusterParams(branching=1)
        with pytest.raises(ValidationError):
            ClusterParams(depth=0)

    def test_default_target_leaf_count(self):
        params = ClusterParams()
        assert params.branching**params.depth == 243
        assert params.effective_min_split_size == 6

    @settings(max_examples=20)
    @given(
        n=st.integers(min_value=1, max_value=60),
        seed=st.integers(min_value=0, max_value=1000),
    )
    def test_partition_property(self, n, seed):
        rng = make_rng(seed)
        vectors = {}
        for i in range(n):
            dense = rng.random(4) + 0.01
            dense /= dense.sum()
            vectors[f"d{i:03d}"] = sv(dense)
        tree = build_tree(vectors, ClusterParams(branching=3, depth=2, rng_seed=seed))
        members = [d for leaf in tree.leaves for d in leaf.member_ids]
        assert len(members) == n  # disjoint
        assert set(members) == set(vectors)  # covering

    def test_internal_nodes_union_children(self):
        rng = make_rng(3)
        vectors = {}
        for i in range(100):
            dense = rng.random(6) + 0.01
            dense /= dense.sum()
            vectors[f"d{i:03d}"] = sv(dense)
        tree = build_tree(vectors, ClusterParams(branching=3, depth=2, rng_seed=1))

        def check(node):
            if node.children:
                union = set()
                for child in node.children:
                    union |= set(child.member_ids)
                    check(child)
                assert union == set(node.member_ids)

        check(tree.root)

    def test_determinism(self):
        rng = make_rng(13)
        vectors = {}
        for i in range(150):
            dense = rng.random(8) + 0.01
            dense /= dense.sum()
            vectors[f"d{i:03d}"] = sv(dense)
        params = ClusterParams(branching=3, depth=3, rng_seed=21)
        a = build_tree(vectors, params)
        b = build_tree(vectors, params)
        assert [leaf.member_ids for leaf in a.leaves] == [
            leaf.member_ids for leaf in b.leaves
        ]


class TestLeafAssignment:
    def test_total_function_and_sizes(self):
        rng = make_rng(17)
        vectors = {}
        for i in range(80):
            dense = rng.random(5) + 0.01
            dense /= dense.sum()
            vectors[f"d{i:03d}"] = sv(dense)
        tree = build_tree(vectors, ClusterParams(branching=3, depth=2, rng_seed=2))
        label_of = leaf_assignment(tree)
        assert set(label_of) == set(vectors)
        sizes = [len(leaf.member_ids) for leaf in tree.leaves]
        assert sum(sizes) == len(vectors)
        for leaf_id, leaf in enumerate(tree.leaves):
            for d in leaf.member_ids:
                assert label_of[d] == leaf_id

    def test_dump_jsonl(self):
        vocab = Vocabulary(
            terms=("alpha", "beta"), doc_freqs=(2, 1), index={"alpha": 0, "beta": 1}
        )
        vectors = {"a": sv([1.0, 0.0]), "b": sv([0.0, 1.0]), "c": sv([0.9, 0.1])}
        tree = build_tree(vectors, ClusterParams(branching=2, depth=1, min_split_size=2, rng_seed=0))
        dump = dump_tree_jsonl(tree, vocab)
        assert dump.count("\n") == len(tree.leaves)
        assert '"leaf": 0' in dump
