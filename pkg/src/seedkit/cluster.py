"""Divisive hierarchical k-means over document vectors.

The tree splits each node into `branching` children with Lloyd k-means
(farthest-point seeding, empty-cluster repair) and recurses to `depth`
levels, giving at most branching**depth leaves: 243 at the default 3-way,
depth-5 parameters. Nodes too small to split, or without enough distinct
points, become leaves early.

Every node draws from its own PRNG stream derived from (rng_seed, node
path), so sibling subtrees could be built concurrently without changing
the result; the build here is serial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .rng import derive_seed, make_rng
from .textpipe import SparseVector, VectorizedCorpus, Vocabulary

_SSE_SLACK = 1e-9  # relative slack absorbing float reduction noise


@dataclass(frozen=True)
class ClusterParams:
    branching: int = 3
    depth: int = 5
    max_iterations: int = 50
    convergence_tol: float = 1e-6
    rng_seed: int = 0
    min_split_size: int | None = None  # defaults to 2 * branching

    def __post_init__(self):
        if self.branching < 2:
            raise ValidationError("branching must be >= 2")
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.convergence_tol < 0:
            raise ValidationError("convergence_tol must be >= 0")

    @property
    def effective_min_split_size(self) -> int:
        return 2 * self.branching if self.min_split_size is None else self.min_split_size


@dataclass
class ClusterNode:
    """One tree node: centroid, member ids, and children (empty for leaves)."""

    path: tuple[int, ...]
    centroid: np.ndarray
    member_ids: tuple[str, ...]
    children: list["ClusterNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    root: ClusterNode
    leaves: list[ClusterNode]
    params: ClusterParams
    fully_split: bool  # False when any node became a leaf before max depth

    def leaf_sizes(self) -> list[int]:
        return [len(leaf.member_ids) for leaf in self.leaves]


def _as_vectorized(
    vectors: Mapping[str, SparseVector] | VectorizedCorpus,
) -> tuple[tuple[str, ...], sp.csr_matrix]:
    if isinstance(vectors, VectorizedCorpus):
        return vectors.ids, vectors.matrix
    ids = tuple(vectors)
    if not ids:
        raise ValidationError("no documents to cluster")
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    n_cols = 0
    for doc_id in ids:
        for col, weight in vectors[doc_id].entries:
            indices.append(col)
            data.append(weight)
            n_cols = max(n_cols, col + 1)
        indptr.append(len(indices))
    matrix = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(ids), n_cols),
    )
    return ids, matrix


def _sq_distances(x: sp.csr_matrix, sq_norms: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_points, n_centers)."""
    cross = x @ centers.T
    center_sq = np.einsum("ij,ij->i", centers, centers)
    d = sq_norms[:, None] - 2.0 * np.asarray(cross) + center_sq[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _farthest_point_seeds(
    x: sp.csr_matrix, sq_norms: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray | None:
    """Maximin seeding: random first center, then repeatedly the point
    farthest from the chosen set (ties to the lowest row). Returns None
    when fewer than k distinct points exist."""
    n = x.shape[0]
    chosen = [int(rng.integers(0, n))]
    min_d = _sq_distances(x, sq_norms, np.asarray(x[chosen[0]].todense()).ravel()[None, :])[:, 0]
    while len(chosen) < k:
        far = int(np.argmax(min_d))
        if min_d[far] <= 0.0:
            return None
        chosen.append(far)
        d_new = _sq_distances(x, sq_norms, np.asarray(x[far].todense()).ravel()[None, :])[:, 0]
        np.minimum(min_d, d_new, out=min_d)
    return np.vstack([np.asarray(x[i].todense()).ravel() for i in chosen])


def _lloyd(
    x: sp.csr_matrix,
    sq_norms: np.ndarray,
    centers: np.ndarray,
    params: ClusterParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations with empty-cluster repair.

    Returns (labels, centers). Asserts the within-cluster SSE never
    increases from one iteration to the next.
    """
    k = centers.shape[0]
    n = x.shape[0]
    rows = np.arange(n)
    prev_sse = np.inf
    labels = np.zeros(n, dtype=np.int64)
    d = _sq_distances(x, sq_norms, centers)
    for _ in range(params.max_iterations):
        labels = np.argmin(d, axis=1)
        point_d = d[rows, labels]

        # refill empties with the point farthest from its centroid, never
        # draining a cluster down to zero (n >= k, so a donor always exists)
        counts = np.bincount(labels, minlength=k)
        while (counts == 0).any():
            empty = int(np.argmin(counts))
            eligible = np.where(counts[labels] >= 2)[0]
            far = int(eligible[np.argmax(point_d[eligible])])
            counts[labels[far]] -= 1
            labels[far] = empty
            counts[empty] += 1
            point_d[far] = 0.0

        new_centers = np.empty_like(centers)
        for c in range(k):
            new_centers[c] = np.asarray(x[labels == c].mean(axis=0)).ravel()
        centers = new_centers

        d = _sq_distances(x, sq_norms, centers)
        sse = float(d[rows, labels].sum())
        assert sse <= prev_sse * (1 + _SSE_SLACK) + _SSE_SLACK, (
            f"within-cluster SSE increased: {prev_sse} -> {sse}"
        )
        if prev_sse < np.inf:
            denom = max(prev_sse, np.finfo(float).tiny)
            if (prev_sse - sse) / denom <= params.convergence_tol:
                prev_sse = sse
                break
        prev_sse = sse
    return labels, centers


def build_tree(
    vectors: Mapping[str, SparseVector] | VectorizedCorpus,
    params: ClusterParams,
) -> ClusterTree:
    """Grow the divisive tree. Deterministic for fixed (vectors, params)."""
    ids, matrix = _as_vectorized(vectors)
    if len(ids) == 0:
        raise ValidationError("no documents to cluster")
    matrix = matrix.tocsr()
    sq_norms_all = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()

    ids_arr = np.asarray(ids, dtype=object)
    fully_split = True

    def grow(rows: np.ndarray, path: tuple[int, ...], remaining_depth: int) -> ClusterNode:
        nonlocal fully_split
        x = matrix[rows]
        centroid = np.asarray(x.mean(axis=0)).ravel()
        node = ClusterNode(
            path=path,
            centroid=centroid,
            member_ids=tuple(ids_arr[rows].tolist()),
        )
        if remaining_depth == 0:
            return node
        if len(rows) < params.effective_min_split_size:
            fully_split = False
            return node
        rng = make_rng(derive_seed(params.rng_seed, "cluster-node", *path))
        sq = sq_norms_all[rows]
        seeds = _farthest_point_seeds(x, sq, params.branching, rng)
        if seeds is None:  # fewer distinct points than branches
            fully_split = False
            return node
        labels, _ = _lloyd(x, sq, seeds, params)
        for c in range(params.branching):
            child_rows = rows[labels == c]
            node.children.append(grow(child_rows, path + (c,), remaining_depth - 1))
        return node

    root = grow(np.arange(len(ids)), (), params.depth)

    leaves: list[ClusterNode] = []

    def collect(node: ClusterNode) -> None:
        if node.is_leaf:
            leaves.append(node)
        else:
            for child in node.children:
                collect(child)

    collect(root)
    return ClusterTree(root=root, leaves=leaves, params=params, fully_split=fully_split)


def leaf_assignment(tree: ClusterTree) -> dict[str, int]:
    """Map every input document id to its leaf ordinal (deterministic DFS order)."""
    assignment: dict[str, int] = {}
    for leaf_id, leaf in enumerate(tree.leaves):
        for doc_id in leaf.member_ids:
            assignment[doc_id] = leaf_id
    return assignment


def dump_tree_jsonl(tree: ClusterTree, vocab: Vocabulary, top_k: int = 10) -> str:
    """Audit dump: one JSON object per leaf with its top centroid terms."""
    lines = []
    for leaf_id, leaf in enumerate(tree.leaves):
        order = np.argsort(-leaf.centroid, kind="stable")[:top_k]
        terms = [vocab.terms[i] for i in order if leaf.centroid[i] > 0]
        lines.append(
            json.dumps(
                {"leaf": leaf_id, "size": len(leaf.member_ids), "top_terms": terms},
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"
