"""Synthetic labeled corpora with topic structure and planted keywords.

Real review populations are confidential, so experiments run against a
generator instead. Every document carries a latent relevance strength in
[0, 1]. Relevant documents (positives, plus a slice of "lookalike"
negatives, the false positives that broad keyword lists are known to
attract) commit to one hot issue topic and mix it with the cold
background according to strength; part of their background tokens come
from a permuted word ranking, a diffuse signal that takes many training
examples to estimate. Each keyword appears in a document with a
popularity-scaled probability that rises with strength when
`keyword_informativeness` is positive; at 0 both classes hit keywords at
the same base rate. The class overlap keeps precision off the ceiling so
seed-size and strategy effects stay measurable.

Positive labels are assigned by exact count (round(richness * n_docs)
documents chosen at random), so empirical richness matches the requested
rate up to rounding.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, LabeledCorpus
from .errors import ValidationError
from .keywords import KeywordList
from .rng import derive_seed, make_rng

_KEYWORD_BASE_HIT = 0.05  # per-keyword presence probability at strength 0
_KEYWORD_HIT_GAIN = 1.2  # presence slope in informativeness * strength
_KEYWORD_POP_OFFSET = 6.0  # keyword popularity decay 1 / (rank + offset)
_KEYWORD_MAX_HIT = 0.95
_HOT_TOPIC_SHARE = 0.3  # fraction of topics acting as relevant "issues"
_DIRICHLET_SCALE = 2.5  # low concentration: heavy per-doc topic noise
_STRENGTH_POS = (2.2, 1.3)  # Beta parameters: positives lean on their issue
_STRENGTH_NEG = (1.1, 5.0)  # ordinary negatives lean cold
_LOOKALIKE_FRACTION = 0.09  # negatives that imitate strong positives on some issue
_LOOKALIKE_STRENGTH = (5.0, 1.2)  # lookalikes crowd the high-strength region
_ISSUE_ZIPF_OFFSET = 1.0  # issue popularity decay: rare issues need bigger seeds
_ZIPF_OFFSET = 10.0  # word rank decay 1 / (rank + offset) inside a topic
_BACKGROUND_TILT = 0.7  # chance an issue-doc token uses the tilted word order


@dataclass(frozen=True)
class SyntheticSpec:
    n_docs: int
    richness: float
    n_topics: int = 24
    vocab_size: int = 6000
    keyword_informativeness: float = 0.7
    n_keywords: int = 25
    doc_length_mean: float = 120.0
    doc_length_sigma: float = 0.6
    doc_length_min: int = 20
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_docs < 2:
            raise ValidationError("n_docs must be >= 2")
        if not 0.0 < self.richness < 1.0:
            raise ValidationError("richness must lie in (0, 1)")
        n_pos = round(self.richness * self.n_docs)
        if n_pos < 1 or n_pos > self.n_docs - 1:
            raise ValidationError(
                f"richness {self.richness} with {self.n_docs} docs yields no class mix"
            )
        if self.n_topics < 2:
            raise ValidationError("n_topics must be >= 2")
        if not 0.0 <= self.keyword_informativeness <= 1.0:
            raise ValidationError("keyword_informativeness must lie in [0, 1]")
        if self.n_keywords < 1:
            raise ValidationError("n_keywords must be >= 1")
        if self.vocab_size < self.n_topics + self.n_keywords:
            raise ValidationError("vocab_size too small for topics plus keywords")
        if self.doc_length_min < 1 or self.doc_length_mean < self.doc_length_min:
            raise ValidationError("document length parameters are infeasible")
        if self.doc_length_sigma < 0:
            raise ValidationError("doc_length_sigma must be >= 0")


def _letters(value: int) -> str:
    """Base-26 rendering of value using a-z (letters only, tokenizer-safe)."""
    digits = []
    value = int(value)
    while True:
        value, rem = divmod(value, 26)
        digits.append(string.ascii_lowercase[rem])
        if value == 0:
            break
    return "".join(reversed(digits))


def topic_word(i: int) -> str:
    return "w" + _letters(i)


def keyword_word(i: int) -> str:
    return "kw" + _letters(i)


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / (np.arange(n) + _ZIPF_OFFSET)
    return w / w.sum()


def _doc_profile(
    label: int, n_hot: int, issue_cdf: np.ndarray, rng: np.random.Generator
) -> tuple[float, int | None]:
    """Latent (strength, issue) profile for one document.

    Positives and lookalike negatives commit to a single hot issue drawn
    from a skewed popularity distribution; ordinary negatives have no
    issue and spread their small hot mass evenly. Lookalikes sit high on
    the strength scale, so they crowd exactly the region that greedy
    keyword scoring samples from.
    """
    if label == 1:
        a, b = _STRENGTH_POS
    elif rng.random() < _LOOKALIKE_FRACTION:
        a, b = _LOOKALIKE_STRENGTH
    else:
        return float(rng.beta(*_STRENGTH_NEG)), None
    issue = int(np.searchsorted(issue_cdf, rng.random(), side="right"))
    return float(rng.beta(a, b)), min(issue, n_hot - 1)


def generate_synthetic(spec: SyntheticSpec) -> tuple[LabeledCorpus, KeywordList]:
    """Build a labeled corpus and its keyword list. Deterministic per seed."""
    rng = make_rng(derive_seed(spec.rng_seed, "synth"))

    n_topic_words = spec.vocab_size - spec.n_keywords
    words_per_topic = n_topic_words // spec.n_topics
    topic_words = [
        [topic_word(t * words_per_topic + j) for j in range(words_per_topic)]
        for t in range(spec.n_topics)
    ]
    word_cdf = np.cumsum(_zipf_weights(words_per_topic))
    # issue documents re-rank words through this permutation for a share of
    # their tokens, planting a diffuse per-word signal that takes many
    # training examples to estimate
    tilt_perm = rng.permutation(words_per_topic)

    keywords = [keyword_word(i) for i in range(spec.n_keywords)]
    kw_raw = 1.0 / (np.arange(spec.n_keywords) + _KEYWORD_POP_OFFSET)
    kw_popularity = kw_raw * spec.n_keywords / kw_raw.sum()  # mean 1

    n_hot = max(1, round(spec.n_topics * _HOT_TOPIC_SHARE))
    hot_prior = np.zeros(spec.n_topics)
    hot_prior[:n_hot] = 1.0 / n_hot
    cold_prior = np.zeros(spec.n_topics)
    cold_prior[n_hot:] = 1.0 / (spec.n_topics - n_hot)
    issue_weights = 1.0 / (np.arange(n_hot) + _ISSUE_ZIPF_OFFSET)
    issue_cdf = np.cumsum(issue_weights / issue_weights.sum())

    kappa = spec.keyword_informativeness
    n_pos = round(spec.richness * spec.n_docs)
    positive_rows = set(rng.permutation(spec.n_docs)[:n_pos].tolist())

    mu = np.log(spec.doc_length_mean) - 0.5 * spec.doc_length_sigma**2

    docs = []
    pad = len(str(spec.n_docs - 1))
    for row in range(spec.n_docs):
        label = 1 if row in positive_rows else 0
        strength, issue = _doc_profile(label, n_hot, issue_cdf, rng)
        if issue is None:
            relevant_prior = hot_prior
        else:
            relevant_prior = np.zeros(spec.n_topics)
            relevant_prior[issue] = 1.0
        prior = strength * relevant_prior + (1.0 - strength) * cold_prior

        length = int(max(spec.doc_length_min, round(rng.lognormal(mu, spec.doc_length_sigma))))
        mixture = rng.dirichlet(prior * _DIRICHLET_SCALE + 1e-8)
        topics = rng.choice(spec.n_topics, size=length, p=mixture)
        word_idx = np.searchsorted(word_cdf, rng.random(length), side="right")
        np.clip(word_idx, 0, words_per_topic - 1, out=word_idx)
        if issue is not None:
            tilted = rng.random(length) < _BACKGROUND_TILT
            word_idx[tilted] = tilt_perm[word_idx[tilted]]
        tokens = [
            topic_words[t][j] for t, j in zip(topics.tolist(), word_idx.tolist())
        ]

        # keyword hits are presence draws per keyword, scaled by popularity
        # and tilted toward high-strength documents when kappa > 0
        hit_p = np.minimum(
            kw_popularity * (_KEYWORD_BASE_HIT + _KEYWORD_HIT_GAIN * kappa * strength),
            _KEYWORD_MAX_HIT,
        )
        present = np.flatnonzero(rng.random(spec.n_keywords) < hit_p)
        if present.size:
            tokens.extend(keywords[i] for i in present)
            order = rng.permutation(len(tokens))
            tokens = [tokens[i] for i in order]
        docs.append(
            Document(id=f"d{row:0{pad}d}", text=" ".join(tokens), label=label)
        )

    corpus = LabeledCorpus(docs, name=f"synthetic-{spec.rng_seed}")
    return corpus, KeywordList.from_strings(keywords)


def spec_from_file(path: str | Path) -> SyntheticSpec:
    """Parse a SyntheticSpec JSON document; unknown keys are errors."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ValidationError("synthetic spec must be a JSON object")
    known = set(SyntheticSpec.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown synthetic spec keys: {sorted(unknown)}")
    missing = {"n_docs", "richness"} - set(raw)
    if missing:
        raise ValidationError(f"synthetic spec missing keys: {sorted(missing)}")
    return SyntheticSpec(**raw)


def write_corpus_jsonl(corpus: LabeledCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus:
            f.write(
                json.dumps(
                    {"id": doc.id, "text": doc.text, "label": doc.label},
                    sort_keys=True,
                )
            )
            f.write("\n")


def write_keywords(keyword_list: KeywordList, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# generated keyword list\n")
        for kw in keyword_list.keywords:
            f.write(kw + "\n")
