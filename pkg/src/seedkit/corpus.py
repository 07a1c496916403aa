"""Labeled document collections: loading, splitting, and richness statistics.

Documents carry a binary label (1 = positive class: responsive or
privileged; 0 = negative). Unlabeled documents are accepted at ingestion
but excluded from richness and from training/evaluation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusParseError, SizeError, UndefinedRichnessError, ValidationError
from .rng import derive_seed, make_rng, sample_without_replacement

POSITIVE = 1
NEGATIVE = 0


@dataclass(frozen=True, slots=True)
class Document:
    """One document: unique id, raw text, optional binary label."""

    id: str
    text: str
    label: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be non-empty")
        if self.label is not None and self.label not in (POSITIVE, NEGATIVE):
            raise ValidationError(f"document {self.id!r}: label must be 1, 0 or None")


class LabeledCorpus:
    """Ordered, immutable collection of documents with unique ids.

    Iteration order equals insertion order; this ordering anchors every
    deterministic operation downstream.
    """

    def __init__(self, documents: Iterable[Document], name: str = ""):
        self.name = name
        self._documents: tuple[Document, ...] = tuple(documents)
        self._by_id: dict[str, Document] = {}
        for doc in self._documents:
            if doc.id in self._by_id:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            self._by_id[doc.id] = doc

    def __len__(self) -> int:
        return len(self._documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self._documents)

    def subset(self, doc_ids: Iterable[str]) -> list[Document]:
        """Documents for the given ids, returned in corpus order."""
        wanted = set(doc_ids)
        missing = wanted - self._by_id.keys()
        if missing:
            raise ValidationError(f"unknown document ids: {sorted(missing)[:5]}")
        return [d for d in self._documents if d.id in wanted]


@dataclass(frozen=True)
class SplitSpec:
    """Test holdout specification: fraction of the corpus plus a seed."""

    test_fraction: float = 0.10
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint partition of a corpus into selection pool and test set."""

    selection_pool: frozenset[str]
    test_set: frozenset[str]

    def __post_init__(self):
        if self.selection_pool & self.test_set:
            raise ValidationError("selection pool and test set overlap")


def _parse_label(raw, line: int) -> int | None:
    if raw is None or raw == "":
        return None
    if raw in (1, "1"):
        return POSITIVE
    if raw in (0, "0"):
        return NEGATIVE
    raise CorpusParseError(f"label must be 1, 0 or empty, got {raw!r}", line)


def _load_jsonl(path: Path) -> Iterator[Document]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"invalid JSON ({exc.msg})", lineno) from exc
            if not isinstance(row, dict) or "id" not in row:
                raise CorpusParseError("row must be an object with an 'id' field", lineno)
            doc_id = row["id"]
            if not isinstance(doc_id, str):
                raise CorpusParseError("'id' must be a string", lineno)
            text = row.get("text", "")
            if not isinstance(text, str):
                raise CorpusParseError("'text' must be a string", lineno)
            try:
                yield Document(doc_id, text, _parse_label(row.get("label"), lineno))
            except ValidationError as exc:
                raise CorpusParseError(str(exc), lineno) from exc


def _load_csv(path: Path) -> Iterator[Document]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["id", "text", "label"]:
            raise CorpusParseError(f"expected header id,text,label, got {header}", 1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise CorpusParseError(f"expected 3 fields, got {len(row)}", lineno)
            doc_id, text, label = row
            try:
                yield Document(doc_id, text, _parse_label(label, lineno))
            except ValidationError as exc:
                raise CorpusParseError(str(exc), lineno) from exc


def load_corpus(path: str | Path, format: str | None = None, name: str | None = None) -> LabeledCorpus:
    """Load a corpus from JSONL or CSV.

    format defaults from the file suffix. Duplicate ids are rejected with
    the offending id named; malformed rows report their line number.
    """
    path = Path(path)
    if format is None:
        format = {".jsonl": "jsonl", ".csv": "csv"}.get(path.suffix.lower())
        if format is None:
            raise ValidationError(f"cannot infer format from suffix {path.suffix!r}")
    if format == "jsonl":
        docs = _load_jsonl(path)
    elif format == "csv":
        docs = _load_csv(path)
    else:
        raise ValidationError(f"unknown corpus format {format!r}")
    return LabeledCorpus(docs, name=name if name is not None else path.stem)


def holdout_size(n: int, test_fraction: float) -> int:
    """Round-half-up of test_fraction * n."""
    return int(Fraction(test_fraction).limit_denominator(10**9) * n + Fraction(1, 2))


def split(corpus: LabeledCorpus, spec: SplitSpec) -> CorpusSplit:
    """Partition corpus ids into selection pool and a static random test set.

    The test set is sampled uniformly without replacement via the canonical
    partial Fisher-Yates primitive; identical (corpus, spec) inputs
    reproduce the identical split across runs and process restarts.
    """
    n = len(corpus)
    if n == 0:
        raise SizeError("cannot split an empty corpus")
    k = holdout_size(n, spec.test_fraction)
    if k < 1 or k > n - 1:
        raise SizeError(f"degenerate split: test size {k} of {n} documents")
    rng = make_rng(derive_seed(spec.rng_seed, "corpus-split"))
    ids = corpus.ids()
    test = frozenset(sample_without_replacement(ids, k, rng))
    pool = frozenset(ids) - test
    return CorpusSplit(selection_pool=pool, test_set=test)


def richness(documents: Iterable[Document]) -> Fraction:
    """Positive fraction among labeled documents, as an exact ratio."""
    positives = 0
    labeled = 0
    for doc in documents:
        if doc.label is None:
            continue
        labeled += 1
        positives += doc.label == POSITIVE
    if labeled == 0:
        raise UndefinedRichnessError("no labeled documents")
    return Fraction(positives, labeled)
