"""The eight seed set selection strategies.

Every strategy maps (ordered selection pool, auxiliary structure, spec) to
exactly `size` distinct pool documents, or raises a typed infeasibility
error; there is never a silent shortfall. All randomness flows through the
canonical generator seeded from spec.rng_seed, and all tie-breaking is by
ascending document id, so results are reproducible bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cluster import ClusterTree
from .errors import (
    InfeasibleAllocationError,
    InfeasibleSeedError,
    SizeError,
    ValidationError,
)
from .keywords import KeywordIndex
from .rng import derive_seed, make_rng, sample_without_replacement

STRATEGIES = (
    "random_sample",
    "stratified_keyword",
    "stratified_keyword_weighted",
    "keyword_model_top_scoring",
    "keyword_model_stratified",
    "weighted_keyword_model_stratified",
    "clustering",
    "clustering_weighted",
)

N_POINT_GROUPS = 10  # point-score strata used by the stratified keyword models


@dataclass(frozen=True)
class SeedSpec:
    strategy: str
    size: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.size < 1:
            raise ValidationError("seed size must be >= 1")


@dataclass(frozen=True)
class SeedSet:
    """Selected document ids (in draw order) with per-document provenance."""

    doc_ids: tuple[str, ...]
    provenance: dict[str, str]

    def __post_init__(self):
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValidationError("seed set contains duplicate ids")

    def __len__(self) -> int:
        return len(self.doc_ids)

    def id_set(self) -> frozenset[str]:
        return frozenset(self.doc_ids)


def seed_to_csv(seed: SeedSet, strategy: str, rng_seed: int) -> str:
    buf = io.StringIO()
    buf.write("doc_id,strategy,stratum,rng_seed\n")
    for doc_id in seed.doc_ids:
        buf.write(f"{doc_id},{strategy},{seed.provenance.get(doc_id, '')},{rng_seed}\n")
    return buf.getvalue()


def allocate_proportional(stratum_sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder apportionment of `total` across strata.

    Quotas are proportional to stratum_sizes, sum to total, and never
    exceed the stratum size; overflow is redistributed among strata with
    remaining capacity, again by largest remainder. Remainder ties break
    by stratum index. Exact arithmetic throughout.
    """
    sizes = [int(s) for s in stratum_sizes]
    if any(s < 0 for s in sizes):
        raise ValidationError("stratum sizes must be nonnegative")
    if total < 1:
        raise ValidationError("total must be >= 1")
    if not any(sizes):
        raise ValidationError("at least one stratum must be nonzero")
    if total > sum(sizes):
        raise InfeasibleAllocationError(
            f"cannot allocate {total} across strata holding {sum(sizes)}"
        )

    quotas = [0] * len(sizes)
    capacity = sizes[:]
    left = total
    while left > 0:
        active = [i for i in range(len(sizes)) if capacity[i] > 0]
        weight_sum = sum(sizes[i] for i in active)
        ideals = {i: Fraction(left * sizes[i], weight_sum) for i in active}
        round_quota = {i: int(ideals[i]) for i in active}
        leftover = left - sum(round_quota.values())
        by_remainder = sorted(active, key=lambda i: (round_quota[i] - ideals[i], i))
        for i in by_remainder[:leftover]:
            round_quota[i] += 1
        for i in active:
            grant = min(round_quota[i], capacity[i])
            quotas[i] += grant
            capacity[i] -= grant
            left -= grant
    return quotas


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InfeasibleSeedError(message)


def _draw(pool: Sequence[str], k: int, rng: np.random.Generator) -> list[str]:
    return sample_without_replacement(pool, k, rng)


def _strategy_rng(spec: SeedSpec) -> np.random.Generator:
    return make_rng(derive_seed(spec.rng_seed, "select", spec.strategy, spec.size))


def random_sample(pool: Sequence[str], spec: SeedSpec) -> SeedSet:
    """Strategy 1: uniform sample without replacement from the pool."""
    _require(spec.size <= len(pool), f"seed size {spec.size} exceeds pool size {len(pool)}")
    picks = _draw(pool, spec.size, _strategy_rng(spec))
    return SeedSet(tuple(picks), {d: "random" for d in picks})


def _pool_postings(pool: Sequence[str], index: KeywordIndex) -> dict[str, list[str]]:
    pool_set = set(pool)
    return {
        key: sorted(posting & pool_set) for key, posting in index.postings.items()
    }


def _hit_docs(pool: Sequence[str], index: KeywordIndex) -> list[str]:
    return [d for d in pool if index.points_of(d) >= 1]


def stratified_keyword(pool: Sequence[str], index: KeywordIndex, spec: SeedSpec) -> SeedSet:
    """Strategy 2: at least one document per keyword, then random fill.

    Phase 1 walks keywords in list order picking one still-unselected
    document per non-empty posting. If phase 1 alone exceeds the seed
    size, its picks are randomly downsampled; otherwise the remainder is
    drawn uniformly from the rest of the keyword-hit documents.
    """
    rng = _strategy_rng(spec)
    hit = _hit_docs(pool, index)
    _require(spec.size <= len(hit), f"only {len(hit)} keyword-hit documents for size {spec.size}")

    selected: list[str] = []
    selected_set: set[str] = set()
    prov: dict[str, str] = {}
    for key, members in _pool_postings(pool, index).items():
        avail = [d for d in members if d not in selected_set]
        if not avail:
            continue
        pick = avail[int(rng.integers(0, len(avail)))]
        selected.append(pick)
        selected_set.add(pick)
        prov[pick] = key

    if len(selected) > spec.size:
        selected = _draw(selected, spec.size, rng)
    elif len(selected) < spec.size:
        remaining = [d for d in hit if d not in selected_set]
        fill = _draw(remaining, spec.size - len(selected), rng)
        selected.extend(fill)
        prov.update({d: "refill" for d in fill})
    return SeedSet(tuple(selected), {d: prov[d] for d in selected})


def stratified_keyword_weighted(
    pool: Sequence[str], index: KeywordIndex, spec: SeedSpec
) -> SeedSet:
    """Strategy 3: per-keyword quotas proportional to posting sizes."""
    rng = _strategy_rng(spec)
    hit = _hit_docs(pool, index)
    _require(spec.size <= len(hit), f"only {len(hit)} keyword-hit documents for size {spec.size}")

    postings = _pool_postings(pool, index)
    keys = list(postings)
    quotas = allocate_proportional([len(postings[k]) for k in keys], spec.size)

    selected: list[str] = []
    selected_set: set[str] = set()
    prov: dict[str, str] = {}
    for key, quota in zip(keys, quotas):
        avail = [d for d in postings[key] if d not in selected_set]
        for pick in _draw(avail, min(quota, len(avail)), rng):
            selected.append(pick)
            selected_set.add(pick)
            prov[pick] = key
    if len(selected) < spec.size:  # cross-keyword overlap produced a shortfall
        remaining = [d for d in hit if d not in selected_set]
        fill = _draw(remaining, spec.size - len(selected), rng)
        selected.extend(fill)
        prov.update({d: "refill" for d in fill})
    return SeedSet(tuple(selected), prov)


def _rank_by_points(pool: Sequence[str], index: KeywordIndex) -> list[str]:
    return sorted(pool, key=lambda d: (-index.points_of(d), d))


def keyword_model_top_scoring(
    pool: Sequence[str], index: KeywordIndex, spec: SeedSpec
) -> SeedSet:
    """Strategy 4: the `size` highest-scoring documents by keyword points."""
    _require(spec.size <= len(pool), f"seed size {spec.size} exceeds pool size {len(pool)}")
    ranked = _rank_by_points(pool, index)[: spec.size]
    prov = {d: f"points={index.points_of(d)}" for d in ranked}
    return SeedSet(tuple(ranked), prov)


def _point_deciles(pool: Sequence[str], index: KeywordIndex) -> list[list[str]]:
    """Cut the point-ranked pool into N_POINT_GROUPS contiguous groups of
    near-equal size, spreading the remainder one per group from the top."""
    if len(pool) < N_POINT_GROUPS:
        raise SizeError(f"pool of {len(pool)} cannot form {N_POINT_GROUPS} point groups")
    ranked = _rank_by_points(pool, index)
    n = len(ranked)
    base, rem = divmod(n, N_POINT_GROUPS)
    groups = []
    start = 0
    for i in range(N_POINT_GROUPS):
        width = base + (1 if i < rem else 0)
        groups.append(ranked[start : start + width])
        start += width
    return groups


def keyword_model_stratified(
    pool: Sequence[str], index: KeywordIndex, spec: SeedSpec
) -> SeedSet:
    """Strategy 5: equal draws from each of ten point-score groups."""
    _require(spec.size <= len(pool), f"seed size {spec.size} exceeds pool size {len(pool)}")
    rng = _strategy_rng(spec)
    groups = _point_deciles(pool, index)
    base, rem = divmod(spec.size, N_POINT_GROUPS)
    quotas = [base + (1 if i < rem else 0) for i in range(N_POINT_GROUPS)]

    selected: list[str] = []
    prov: dict[str, str] = {}
    for i, (group, quota) in enumerate(zip(groups, quotas)):
        for pick in _draw(group, min(quota, len(group)), rng):
            selected.append(pick)
            prov[pick] = f"group={i}"
    if len(selected) < spec.size:  # some groups were smaller than their quota
        selected_set = set(selected)
        remaining = [d for d in pool if d not in selected_set]
        fill = _draw(remaining, spec.size - len(selected), rng)
        selected.extend(fill)
        prov.update({d: "refill" for d in fill})
    return SeedSet(tuple(selected), prov)


def weighted_keyword_model_stratified(
    pool: Sequence[str], index: KeywordIndex, spec: SeedSpec
) -> SeedSet:
    """Strategy 6: group quotas proportional to each group's keyword-hit count.

    Draws come from the keyword-hit members of each group; zero-point
    documents are not reachable here.
    """
    rng = _strategy_rng(spec)
    groups = _point_deciles(pool, index)
    hit_members = [[d for d in g if index.points_of(d) >= 1] for g in groups]
    hit_counts = [len(m) for m in hit_members]
    if not any(hit_counts):
        raise InfeasibleSeedError("every point group contains zero keyword-hit documents")
    try:
        quotas = allocate_proportional(hit_counts, spec.size)
    except InfeasibleAllocationError as exc:
        raise InfeasibleSeedError(str(exc)) from exc

    selected: list[str] = []
    prov: dict[str, str] = {}
    for i, (members, quota) in enumerate(zip(hit_members, quotas)):
        for pick in _draw(members, quota, rng):
            selected.append(pick)
            prov[pick] = f"group={i}"
    return SeedSet(tuple(selected), prov)


def _leaf_members(pool: Sequence[str], tree: ClusterTree) -> list[list[str]]:
    pool_set = set(pool)
    members = [[d for d in leaf.member_ids if d in pool_set] for leaf in tree.leaves]
    covered = sum(len(m) for m in members)
    if covered != len(pool_set):
        raise ValidationError("cluster tree does not cover the selection pool")
    return members


def clustering_select(pool: Sequence[str], tree: ClusterTree, spec: SeedSpec) -> SeedSet:
    """Strategy 7: an equal number of documents from each leaf cluster.

    Quotas are floor(size / n_leaves) with the remainder spread one per
    leaf in leaf order, capped at leaf size; any shortfall is refilled
    uniformly from the rest of the pool.
    """
    _require(spec.size <= len(pool), f"seed size {spec.size} exceeds pool size {len(pool)}")
    rng = _strategy_rng(spec)
    members = _leaf_members(pool, tree)
    n_leaves = len(members)
    base, rem = divmod(spec.size, n_leaves)
    quotas = [base + (1 if i < rem else 0) for i in range(n_leaves)]

    selected: list[str] = []
    prov: dict[str, str] = {}
    for i, (leaf, quota) in enumerate(zip(members, quotas)):
        for pick in _draw(leaf, min(quota, len(leaf)), rng):
            selected.append(pick)
            prov[pick] = f"leaf={i}"
    if len(selected) < spec.size:
        selected_set = set(selected)
        remaining = [d for d in pool if d not in selected_set]
        fill = _draw(remaining, spec.size - len(selected), rng)
        selected.extend(fill)
        prov.update({d: "refill" for d in fill})
    return SeedSet(tuple(selected), prov)


def clustering_weighted_select(
    pool: Sequence[str], tree: ClusterTree, spec: SeedSpec
) -> SeedSet:
    """Strategy 8: leaf quotas proportional to leaf sizes."""
    _require(spec.size <= len(pool), f"seed size {spec.size} exceeds pool size {len(pool)}")
    rng = _strategy_rng(spec)
    members = _leaf_members(pool, tree)
    quotas = allocate_proportional([len(m) for m in members], spec.size)

    selected: list[str] = []
    prov: dict[str, str] = {}
    for i, (leaf, quota) in enumerate(zip(members, quotas)):
        for pick in _draw(leaf, quota, rng):
            selected.append(pick)
            prov[pick] = f"leaf={i}"
    return SeedSet(tuple(selected), prov)


def select_seed(
    pool: Sequence[str],
    spec: SeedSpec,
    index: KeywordIndex | None = None,
    tree: ClusterTree | None = None,
) -> SeedSet:
    """Dispatch to the named strategy, validating required structures."""
    needs_index = spec.strategy in (
        "stratified_keyword",
        "stratified_keyword_weighted",
        "keyword_model_top_scoring",
        "keyword_model_stratified",
        "weighted_keyword_model_stratified",
    )
    needs_tree = spec.strategy in ("clustering", "clustering_weighted")
    if needs_index and index is None:
        raise ValidationError(f"strategy {spec.strategy} requires a keyword index")
    if needs_tree and tree is None:
        raise ValidationError(f"strategy {spec.strategy} requires a cluster tree")

    dispatch: dict[str, Callable[[], SeedSet]] = {
        "random_sample": lambda: random_sample(pool, spec),
        "stratified_keyword": lambda: stratified_keyword(pool, index, spec),
        "stratified_keyword_weighted": lambda: stratified_keyword_weighted(pool, index, spec),
        "keyword_model_top_scoring": lambda: keyword_model_top_scoring(pool, index, spec),
        "keyword_model_stratified": lambda: keyword_model_stratified(pool, index, spec),
        "weighted_keyword_model_stratified": lambda: weighted_keyword_model_stratified(
            pool, index, spec
        ),
        "clustering": lambda: clustering_select(pool, tree, spec),
        "clustering_weighted": lambda: clustering_weighted_select(pool, tree, spec),
    }
    seed = dispatch[spec.strategy]()
    if len(seed) != spec.size:
        raise InfeasibleSeedError(
            f"{spec.strategy} produced {len(seed)} of {spec.size} documents"
        )
    return seed
