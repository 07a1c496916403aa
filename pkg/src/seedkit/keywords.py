"""Keyword lists, the per-keyword inverted index, and keyword point scores.

A keyword is a token phrase (usually a single token). A document matches a
keyword when the phrase occurs contiguously in the document's token
sequence. Each document scores one point per distinct matching keyword;
an occurrence-count mode exists for sensitivity analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Document
from .errors import ValidationError
from .textpipe import tokenize


@dataclass(frozen=True)
class KeywordList:
    """Ordered keywords with their normalized token phrases.

    phrases[i] is keywords[i] passed through the shared tokenizer; no two
    keywords may normalize to the same phrase.
    """

    keywords: tuple[str, ...]
    phrases: tuple[tuple[str, ...], ...]

    def __len__(self) -> int:
        return len(self.keywords)

    @staticmethod
    def from_strings(keywords: Iterable[str]) -> "KeywordList":
        raw = tuple(keywords)
        if not raw:
            raise ValidationError("keyword list is empty")
        phrases = []
        seen: set[tuple[str, ...]] = set()
        for kw in raw:
            phrase = tuple(tokenize(kw))
            if not phrase:
                raise ValidationError(f"keyword {kw!r} is empty after normalization")
            if phrase in seen:
                raise ValidationError(f"duplicate keyword {kw!r} after normalization")
            seen.add(phrase)
            phrases.append(phrase)
        return KeywordList(keywords=raw, phrases=tuple(phrases))


def load_keywords(path: str | Path) -> KeywordList:
    """Read a keyword file: one keyword per line, '#' comments ignored."""
    lines = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            lines.append(stripped)
    return KeywordList.from_strings(lines)


@dataclass(frozen=True)
class KeywordIndex:
    """Posting sets per keyword plus per-document point scores.

    postings is keyed by normalized phrase (tokens joined by spaces) and
    ordered like the keyword list. points covers only documents with at
    least one match; absent means zero.
    """

    postings: dict[str, frozenset[str]]
    points: dict[str, int]
    n_keywords: int

    def points_of(self, doc_id: str) -> int:
        return self.points.get(doc_id, 0)

    def hit_ids(self) -> frozenset[str]:
        return frozenset(self.points)


def phrase_key(phrase: Sequence[str]) -> str:
    return " ".join(phrase)


def _match_count(tokens: Sequence[str], phrase: tuple[str, ...]) -> int:
    """Occurrences of phrase as a contiguous subsequence of tokens."""
    m = len(phrase)
    if m == 0 or m > len(tokens):
        return 0
    first = phrase[0]
    count = 0
    for i in range(len(tokens) - m + 1):
        if tokens[i] == first and tuple(tokens[i : i + m]) == phrase:
            count += 1
    return count


def build_index(
    pool_docs: Iterable[Document],
    keyword_list: KeywordList,
    count_occurrences: bool = False,
    token_cache: Mapping[str, Sequence[str]] | None = None,
) -> KeywordIndex:
    """Index the selection pool against the keyword list.

    By default points count distinct matching keywords (binary per
    keyword); with count_occurrences=True every occurrence scores.
    """
    postings: dict[str, set[str]] = {phrase_key(p): set() for p in keyword_list.phrases}
    points: dict[str, int] = {}

    single: dict[str, list[str]] = {}
    multi_by_first: dict[str, list[tuple[str, ...]]] = {}
    for phrase in keyword_list.phrases:
        if len(phrase) == 1:
            single.setdefault(phrase[0], []).append(phrase_key(phrase))
        else:
            multi_by_first.setdefault(phrase[0], []).append(phrase)

    seen_any = False
    for doc in pool_docs:
        seen_any = True
        tokens = token_cache[doc.id] if token_cache is not None else tokenize(doc.text)
        score = 0
        if count_occurrences:
            counts: dict[str, int] = {}
            for tok in tokens:
                for key in single.get(tok, ()):
                    counts[key] = counts.get(key, 0) + 1
            token_set = set(tokens)
            for first, phrases in multi_by_first.items():
                if first not in token_set:
                    continue
                for phrase in phrases:
                    c = _match_count(tokens, phrase)
                    if c:
                        counts[phrase_key(phrase)] = c
            for key, c in counts.items():
                postings[key].add(doc.id)
                score += c
        else:
            matched: set[str] = set()
            token_set = set(tokens)
            for tok in token_set:
                for key in single.get(tok, ()):
                    matched.add(key)
            for first, phrases in multi_by_first.items():
                if first not in token_set:
                    continue
                for phrase in phrases:
                    if _match_count(tokens, phrase):
                        matched.add(phrase_key(phrase))
            for key in matched:
                postings[key].add(doc.id)
            score = len(matched)
        if score:
            points[doc.id] = score
    if not seen_any:
        raise ValidationError("selection pool is empty")

    return KeywordIndex(
        postings={k: frozenset(v) for k, v in postings.items()},
        points=points,
        n_keywords=len(keyword_list),
    )


def hit_percentage(index: KeywordIndex, pool_size: int) -> Fraction:
    """Fraction of pool documents matching at least one keyword."""
    if pool_size < 1:
        raise ValidationError("pool_size must be >= 1")
    return Fraction(len(index.points), pool_size)
