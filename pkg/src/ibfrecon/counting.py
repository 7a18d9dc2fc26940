"""Exact counts of IBF state matrices and the derived extraction probabilities.

A state matrix of an IBF with ``h`` blocks of ``n_h`` cells holding ``f``
elements is a stack of ``h`` binary ``n_h x f`` matrices whose columns all have
weight one, so there are ``n_h**(h*f)`` of them. All counts here are Python
ints and all probabilities are ``Fraction`` objects; nothing is rounded until
``format_prob``.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

binomial = math.comb

_z_table: dict[tuple[int, int], int] = {}


def stopping_count(n_h: int, f: int) -> int:
    """Number of ``n_h x f`` weight-one-column matrices with no weight-one row.

    Uses the recursion that subtracts, for every ``i >= 1``, the matrices
    with exactly ``i`` weight-one rows. Base cases: ``z(n, 0) = 1`` and
    ``z(0, f) = 0`` for ``f >= 1``.
    """
    if n_h < 0 or f < 0:
        raise ValueError("n_h and f must be non-negative")
    # z(n, f) only depends on z(n - i, f - i): fill the diagonal bottom-up
    k = min(n_h, f)
    for step in range(k + 1):
        n, m = n_h - k + step, f - k + step
        if (n, m) in _z_table:
            continue
        if m == 0:
            val = 1
        elif n == 0:
            val = 0
        else:
            val = n ** m - sum(
                math.factorial(i) * binomial(n, i) * binomial(m, i) * _z_table[n - i, m - i]
                for i in range(1, min(n, m) + 1)
            )
        _z_table[n, m] = val
    return _z_table[n_h, f]


def theta1(n_h: int, f: int, e: int) -> int:
    """Single-block matrices with exactly ``e`` pivot rows."""
    if e < 0 or e > min(n_h, f):
        return 0
    return binomial(f, e) * binomial(n_h, e) * math.factorial(e) * stopping_count(n_h - e, f - e)


@lru_cache(maxsize=None)
def _psi_recursive(e: int, b: tuple[int, ...]) -> int:
    if e == 0:
        return 1 if not any(b) else 0
    total = 1
    for bi in b:
        total *= binomial(e, bi)
    return total - sum(binomial(e, j) * _psi_recursive(j, b) for j in range(e))


def psi(e: int, b: Sequence[int]) -> int:
    """Ways to pick column subsets of sizes ``b`` whose union is ``e`` fixed columns."""
    if e < 0 or any(x < 0 for x in b):
        raise ValueError("e and the entries of b must be non-negative")
    return _psi_recursive(e, tuple(sorted(b)))


@lru_cache(maxsize=None)
def _psi_closed(e: int, b: tuple[int, ...]) -> int:
    total = 0
    for i in range(1, e + 1):
        term = binomial(e, i)
        for bi in b:
            term *= binomial(i, bi)
        total += -term if (e - i) % 2 else term
    return total


def psi_closed(e: int, b: Sequence[int]) -> int:
    """Inclusion-exclusion form of ``psi``; sum starts at one.

    Disagrees with ``psi`` only for ``b == 0`` with ``e >= 1``.
    """
    if e == 0:
        return 1 if not any(b) else 0
    return _psi_closed(e, tuple(sorted(b)))


def _block_weights(n_h: int, f: int) -> list[int]:
    # w[t]: one block with a fixed t-column pivot set, rest stopping
    top = min(n_h, f)
    return [
        binomial(n_h, t) * math.factorial(t) * stopping_count(n_h - t, f - t)
        if t <= top else 0
        for t in range(f + 1)
    ]


_pascal: list[tuple[int, ...]] = [(1,)]


def _pascal_row(n: int) -> tuple[int, ...]:
    while len(_pascal) <= n:
        prev = _pascal[-1]
        _pascal.append((1,) + tuple(prev[k] + prev[k + 1] for k in range(len(prev) - 1)) + (1,))
    return _pascal[n]


@lru_cache(maxsize=256)
def theta_row(n_h: int, f: int, h: int) -> tuple[int, ...]:
    """``theta(n_h, f, h, e)`` for every ``e`` in ``0..f``.

    Summing psi-weighted products over all ``b`` factorises: for each ``i``
    the inner sum over ``b`` is ``(sum_t C(i, t) w[t]) ** h``, leaving one
    binomial transform per ``e``. Equivalent to ``theta_enumerated``.
    """
    if n_h < 1 or f < 0 or h < 1:
        raise ValueError("need n_h >= 1, f >= 0, h >= 1")
    w = _block_weights(n_h, f)
    g = []
    for i in range(f + 1):
        c = _pascal_row(i)
        g.append(sum(c[t] * w[t] for t in range(i + 1)) ** h)
    # alternating signs folded into g
    g_signed = [x if i % 2 == 0 else -x for i, x in enumerate(g)]
    row = []
    for e in range(f + 1):
        c = _pascal_row(e)
        s = sum(c[i] * g_signed[i] for i in range(e + 1))
        row.append(binomial(f, e) * (s if e % 2 == 0 else -s))
    return tuple(row)


def theta(n_h: int, f: int, h: int, e: int) -> int:
    """Lower bound on the number of state matrices allowing ``e`` extractions.

    Counts matrices whose initial pivots cover exactly ``e`` columns; elements
    that only become pivots after peeling are not credited.
    """
    if e < 0 or e > f:
        return 0
    return theta_row(n_h, f, h)[e]


def _arrangements(b: tuple[int, ...]) -> int:
    n = math.factorial(len(b))
    for k in Counter(b).values():
        n //= math.factorial(k)
    return n


def theta_enumerated(n_h: int, f: int, h: int, e: int) -> int:
    """``theta`` by direct summation over sorted ``b`` vectors with ``sum(b) >= e``."""
    if e < 0 or e > f:
        return 0
    w = _block_weights(n_h, f)
    top = min(e, n_h, f)
    total = 0
    for b in itertools.combinations_with_replacement(range(top + 1), h):
        if sum(b) < e:
            continue
        term = psi(e, b)
        if not term:
            continue
        for bi in b:
            term *= w[bi]
        total += _arrangements(b) * term
    return binomial(f, e) * total


def prob_at_least(n_h: int, f: int, h: int, y: int) -> Fraction:
    """Lower bound on ``Pr(Y >= y)`` for a uniformly random state matrix (exact for h=1)."""
    if not 0 <= y <= f:
        raise ValueError(f"y must lie in [0, {f}]")
    row = theta_row(n_h, f, h)
    return Fraction(sum(row[y:]), n_h ** (h * f))


def prob_none(n_h: int, f: int, h: int) -> Fraction:
    """Exact probability that no element can be extracted."""
    if n_h < 1 or f < 0:
        raise ValueError("need n_h >= 1 and f >= 0")
    return Fraction(stopping_count(n_h, f) ** h, n_h ** (h * f))


def min_extracted(R, f: int) -> int:
    """Smallest extraction count ``e`` with ``e / f >= R``."""
    R = Fraction(R)
    return math.ceil(R * f)


def failure_bound(n_h: int, f: int, h: int, R) -> Fraction:
    """Upper bound on the probability that extraction rate ``R`` is missed."""
    R = Fraction(R)
    if not 0 < R <= 1:
        raise ValueError("R must lie in (0, 1]")
    if f < 1:
        raise ValueError("f must be positive")
    p = 1 - prob_at_least(n_h, f, h, min_extracted(R, f))
    return min(max(p, Fraction(0)), Fraction(1))


def goodrich_main_term(N: int, h: int, f: int) -> Fraction:
    """Dominant two-element failure term ``C(f,2) C(N,h) (h/N)**(2h)``, capped at one."""
    if N % h:
        raise ValueError(f"N={N} is not divisible by h={h}")
    p = binomial(f, 2) * binomial(N, h) * Fraction(h, N) ** (2 * h)
    return min(p, Fraction(1))


def format_prob(p: Fraction, digits: int = 3, exact: bool = False) -> str:
    """Render ``p`` with ``digits`` significant digits, or as ``a/b`` when exact."""
    p = Fraction(p)
    if exact:
        return str(p)
    if p == 0:
        return "0"
    if p == 1:
        return "1"
    with localcontext() as ctx:
        ctx.prec = digits + 10
        d = Decimal(p.numerator) / Decimal(p.denominator)
        s = f"{d:.{digits - 1}e}"
    # a bound within rounding of one is printed as a bare 1
    return "1" if s == f"{Decimal(1):.{digits - 1}e}" else s
