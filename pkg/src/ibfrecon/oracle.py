"""Exhaustive enumeration of small state-matrix spaces.

A state matrix is stored as ``h`` tuples of length ``f``; entry ``[l][j]`` is
the row (cell within block ``l``) holding column ``j``. Independent of the
closed-form counts in ``counting`` and used as their ground truth.
"""
from __future__ import annotations

import itertools
import random
from collections import Counter
from typing import Iterator, Optional

MAX_SPACE = 10**7

StateMatrix = tuple[tuple[int, ...], ...]


class SpaceTooLargeError(ValueError):
    pass


def _guard(n_h: int, f: int, h: int) -> None:
    if n_h < 1 or f < 0 or h < 1:
        raise ValueError("need n_h >= 1, f >= 0, h >= 1")
    if n_h ** (f * h) > MAX_SPACE:
        raise SpaceTooLargeError(f"{n_h}^({f}*{h}) matrices exceeds the {MAX_SPACE} guard")


def enumerate_state_matrices(n_h: int, f: int, h: int) -> Iterator[StateMatrix]:
    _guard(n_h, f, h)
    for flat in itertools.product(range(n_h), repeat=f * h):
        yield tuple(flat[l * f:(l + 1) * f] for l in range(h))


def peel_count(m: StateMatrix, n_h: Optional[int] = None, rng: Optional[random.Random] = None) -> int:
    """Number of columns removed by repeated peeling of weight-one rows.

    Without ``rng`` the first weight-one row (lowest block, lowest row) is
    peeled each time; with ``rng`` a random one is picked.
    """
    h = len(m)
    f = len(m[0]) if h else 0
    if n_h is None:
        n_h = 1 + max((r for block in m for r in block), default=0)
    alive = set(range(f))
    removed = 0
    while True:
        candidates = []
        for l in range(h):
            rows: dict[int, list[int]] = {}
            for j in alive:
                rows.setdefault(m[l][j], []).append(j)
            for r in sorted(rows):
                if len(rows[r]) == 1:
                    candidates.append(rows[r][0])
                    if rng is None:
                        break
            if candidates and rng is None:
                break
        if not candidates:
            return removed
        j = rng.choice(candidates) if rng is not None else candidates[0]
        alive.discard(j)
        removed += 1


def brute_counts(n_h: int, f: int, h: int) -> dict[int, int]:
    """Histogram ``e -> number of matrices peeling exactly e columns`` (all e in 0..f)."""
    hist = Counter(peel_count(m, n_h) for m in enumerate_state_matrices(n_h, f, h))
    return {e: hist.get(e, 0) for e in range(f + 1)}


def brute_z(n_h: int, f: int) -> int:
    """Count of single-block matrices without any weight-one row."""
    if f == 0:
        return 1
    total = 0
    for (cols,) in enumerate_state_matrices(n_h, f, 1):
        occupancy = Counter(cols)
        if 1 not in occupancy.values():
            total += 1
    return total
