"""Deterministic sampling helpers.

Built on random.Random().random() only, whose Mersenne Twister output is
frozen across CPython versions; shuffle/sample in the stdlib are not
guaranteed stable, so split reproducibility uses these instead.
"""

from __future__ import annotations

import random
from typing import Sequence, TypeVar

T = TypeVar("T")


def det_shuffle(items: list[T], rng: random.Random) -> None:
    """In-place Fisher-Yates driven by rng.random()."""
    for i in range(len(items) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        items[i], items[j] = items[j], items[i]


def det_sample(population: Sequence[T], k: int, rng: random.Random) -> list[T]:
    """First k elements of a partial Fisher-Yates pass; order is part of the draw."""
    if not 0 <= k <= len(population):
        raise ValueError(f"sample size {k} out of range for population {len(population)}")
    pool = list(population)
    n = len(pool)
    for i in range(k):
        j = i + int(rng.random() * (n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
