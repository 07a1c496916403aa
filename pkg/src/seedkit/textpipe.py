"""Deterministic tokenizer, vocabulary builder, and normalized-frequency vectorizer.

The representation is fixed: unigram bag of words, no stemming, token
weights are normalized frequency, and the vocabulary keeps the top 20,000
tokens by document frequency. Only max_tokens is meant to be overridden
(smaller values make tests cheap); overrides are echoed into experiment
output by the harness.
"""

from __future__ import annotations

import hashlib
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Document
from .errors import EmptyVocabularyError, ValidationError

# Maximal runs of letters or of digits; a letter-digit boundary splits
# ("2nd" -> "2", "nd"). Unicode-aware: [^\W\d_] is any letter.
_TOKEN_RE = re.compile(r"[^\W\d_]+|\d+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased tokens; drops tokens shorter than 2 chars and pure-digit runs."""
    return [
        t
        for t in _TOKEN_RE.findall(text.lower())
        if len(t) >= 2 and not t.isdigit()
    ]


@dataclass(frozen=True)
class VectorizerConfig:
    """Bag-of-words parameters. Defaults are the fixed model parameters."""

    stemming: bool = False
    ngram_order: int = 1
    token_value: str = "normalized_frequency"
    max_tokens: int = 20_000

    def __post_init__(self):
        if self.stemming:
            raise ValidationError("stemming is fixed off")
        if self.ngram_order != 1:
            raise ValidationError("only unigrams are supported")
        if self.token_value != "normalized_frequency":
            raise ValidationError("token value type is fixed to normalized_frequency")
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token list with stable column ids and audit counts.

    terms[i] has column id i; ordering is document frequency descending,
    ties broken lexicographically ascending.
    """

    terms: tuple[str, ...]
    doc_freqs: tuple[int, ...]
    index: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.terms)

    def sha256(self) -> str:
        h = hashlib.sha256()
        for term in self.terms:
            h.update(term.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    def dump_csv(self) -> str:
        """Audit dump: rank,token,document_frequency."""
        buf = io.StringIO()
        buf.write("rank,token,document_frequency\n")
        for rank, (term, df) in enumerate(zip(self.terms, self.doc_freqs), start=1):
            buf.write(f"{rank},{term},{df}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class SparseVector:
    """Sorted (column id, weight) pairs with strictly positive finite weights."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        prev = -1
        for col, weight in self.entries:
            if col <= prev:
                raise ValidationError("column ids must be strictly increasing")
            if not (weight > 0) or not np.isfinite(weight):
                raise ValidationError("weights must be finite and positive")
            prev = col

    def weight_sum(self) -> float:
        return sum(w for _, w in self.entries)

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)


def build_vocabulary(
    pool_docs: Iterable[Document],
    cfg: VectorizerConfig,
    token_cache: Mapping[str, Sequence[str]] | None = None,
) -> Vocabulary:
    """Rank tokens of the selection pool by document frequency and truncate.

    Never feed test-set documents here; the vocabulary is a training-side
    artifact.
    """
    df: Counter[str] = Counter()
    seen_any = False
    for doc in pool_docs:
        seen_any = True
        tokens = token_cache[doc.id] if token_cache is not None else tokenize(doc.text)
        df.update(set(tokens))
    if not seen_any:
        raise ValidationError("selection pool is empty")
    if not df:
        raise EmptyVocabularyError("pool contains zero distinct tokens")
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.max_tokens]
    terms = tuple(t for t, _ in ranked)
    freqs = tuple(c for _, c in ranked)
    return Vocabulary(terms=terms, doc_freqs=freqs, index={t: i for i, t in enumerate(terms)})


def _counts_to_entries(counts: Mapping[int, int]) -> tuple[tuple[int, float], ...]:
    total = sum(counts.values())
    if total == 0:
        return ()
    return tuple((col, counts[col] / total) for col in sorted(counts))


def vectorize(doc: Document, vocab: Vocabulary) -> SparseVector:
    """Normalized-frequency vector over vocabulary columns.

    The denominator is the in-vocabulary token count, so nonzero vectors
    are exactly L1-normalized; documents with no in-vocabulary tokens
    yield the empty vector.
    """
    if len(vocab) == 0:
        raise ValidationError("vocabulary is empty")
    index = vocab.index
    counts: Counter[int] = Counter()
    for token in tokenize(doc.text):
        col = index.get(token)
        if col is not None:
            counts[col] += 1
    return SparseVector(_counts_to_entries(counts))


class VectorizedCorpus:
    """CSR-backed batch of document vectors, row i belonging to ids[i].

    Rows agree exactly with per-document vectorize() output; the matrix
    form exists so clustering and training can use sparse linear algebra.
    """

    def __init__(self, ids: Sequence[str], matrix: sp.csr_matrix, vocab: Vocabulary):
        if matrix.shape[0] != len(ids):
            raise ValidationError("row count does not match id count")
        self.ids: tuple[str, ...] = tuple(ids)
        self.matrix = matrix
        self.vocab = vocab
        self._row_of = {doc_id: i for i, doc_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def row_of(self, doc_id: str) -> int:
        return self._row_of[doc_id]

    def rows_of(self, doc_ids: Iterable[str]) -> np.ndarray:
        return np.fromiter((self._row_of[d] for d in doc_ids), dtype=np.int64)

    def sparse_vector(self, doc_id: str) -> SparseVector:
        row = self.matrix.getrow(self._row_of[doc_id])
        return SparseVector(tuple(zip(row.indices.tolist(), row.data.tolist())))


def vectorize_corpus(
    docs: Sequence[Document],
    vocab: Vocabulary,
    token_cache: Mapping[str, Sequence[str]] | None = None,
) -> VectorizedCorpus:
    """Vectorize many documents into one CSR matrix.

    token_cache optionally maps doc id to its precomputed token list so
    repeated vectorizations (one per experiment replicate) skip
    re-tokenizing the same text.
    """
    if len(vocab) == 0:
        raise ValidationError("vocabulary is empty")
    index = vocab.index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        tokens = token_cache[doc.id] if token_cache is not None else tokenize(doc.text)
        counts: Counter[int] = Counter()
        for token in tokens:
            col = index.get(token)
            if col is not None:
                counts[col] += 1
        total = sum(counts.values())
        for col in sorted(counts):
            indices.append(col)
            data.append(counts[col] / total)
        indptr.append(len(indices))
    matrix = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), len(vocab)),
    )
    return VectorizedCorpus([d.id for d in docs], matrix, vocab)
