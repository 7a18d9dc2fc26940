"""Markov model of the iterative protocol's symmetric-difference size.

State ``d`` is the number of elements still in the symmetric difference.
At or above the threshold ``N / c_h`` the one-round progress comes from the
state-matrix lower bound; the probability mass it does not cover stays on the
self-loop, which can only lengthen the expected run. Below the threshold a
round either finishes or leaves a two-element stopping set.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .counting import goodrich_main_term, theta_row
from .thresholds import c_h as table_c_h

RESIDUAL_NOTE = (
    "probability mass not covered by the state-matrix count is assigned to the "
    "self-loop (no progress); expected rounds are therefore an upper bound"
)


class NonTerminationError(RuntimeError):
    """A reachable state can never make progress."""


@dataclass(frozen=True)
class MarkovConfig:
    N: int
    h: int
    c_h: Optional[Fraction] = None

    def __post_init__(self):
        if self.h < 1 or self.N % self.h:
            raise ValueError(f"N={self.N} must be a positive multiple of h={self.h}")
        if self.c_h is None:
            object.__setattr__(self, "c_h", table_c_h(self.h))
        else:
            object.__setattr__(self, "c_h", Fraction(self.c_h))

    @property
    def n_h(self) -> int:
        return self.N // self.h

    @property
    def threshold(self) -> Fraction:
        return Fraction(self.N) / self.c_h


def transition_row(d: int, cfg: MarkovConfig) -> dict[int, Fraction]:
    """Exact next-state distribution from state ``d``."""
    return dict(_row(d, cfg))


@lru_cache(maxsize=4096)
def _row(d: int, cfg: MarkovConfig) -> tuple[tuple[int, Fraction], ...]:
    if d < 0:
        raise ValueError("d must be non-negative")
    if d == 0:
        return ((0, Fraction(1)),)
    if d >= cfg.threshold:
        counts = theta_row(cfg.n_h, d, cfg.h)
        total = cfg.n_h ** (cfg.h * d)
        row = {d - e: Fraction(counts[e], total) for e in range(1, d + 1) if counts[e]}
        row[d] = 1 - sum(row.values(), Fraction(0))
    elif d == 1:
        row = {0: Fraction(1)}
    else:
        p = goodrich_main_term(cfg.N, cfg.h, d)
        row = {2: p, 0: 1 - p}
    return tuple(sorted((k, v) for k, v in row.items() if v))


def expected_rounds_table(f_max: int, cfg: MarkovConfig) -> list[float]:
    """Expected rounds to reach state 0 from every start in ``0..f_max``."""
    E = [0.0] * (f_max + 1)
    for d in range(1, f_max + 1):
        row = _row(d, cfg)
        stay = False
        progress = Fraction(0)
        acc = 1.0
        for nxt, p in row:
            if nxt == d:
                stay = True
            else:
                progress += p
                acc += float(p) * E[nxt]
        if progress == 0:
            raise NonTerminationError(
                f"state d={d} has no progress probability (N={cfg.N}, h={cfg.h})"
            )
        # divide by the exact progress mass, not 1 - float(stay)
        E[d] = float(Fraction(acc) / progress) if stay else acc
    return E


def expected_rounds(f_start: int, cfg: MarkovConfig) -> float:
    if f_start < 0:
        raise ValueError("f_start must be non-negative")
    return expected_rounds_table(f_start, cfg)[f_start]
