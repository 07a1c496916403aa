"""Deterministic randomness shared by every module.

One generator family is used throughout: numpy's PCG64, a documented,
seedable 64-bit generator whose stream is stable across platforms and
process restarts. Derived streams are obtained by hashing string labels
so that adding new experiment cells never perturbs existing ones.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_SEP = b"\x1f"


def derive_seed(*parts: object) -> int:
    """Hash a label path into a 64-bit seed.

    Parts are stringified and joined with a separator byte, so
    ("a", "bc") and ("ab", "c") derive different seeds.
    """
    payload = _SEP.join(str(p).encode("utf-8") for p in parts)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def make_rng(seed: int) -> np.random.Generator:
    """Canonical generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_without_replacement(
    items: Sequence[T] | Iterable[T], k: int, rng: np.random.Generator
) -> list[T]:
    """Uniform sample of k distinct items via a partial Fisher-Yates shuffle.

    Order of the returned list is the draw order. Deterministic for a fixed
    generator state and input order.
    """
    pool = list(items)
    n = len(pool)
    if k < 0 or k > n:
        raise ValueError(f"cannot draw {k} items from {n}")
    for i in range(k):
        j = i + int(rng.integers(0, n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
