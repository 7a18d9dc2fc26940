"""Invertible Bloom filter with signed counts and iterative peeling."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .hashing import (
    CHECKSUM_MASK,
    ELEMENT_BYTES,
    MODULUS,
    HashSpec,
    decode_element,
    encode_element,
)

HEADER = struct.Struct(">IHII")
CELL_BYTES = 8 + ELEMENT_BYTES + 8

Indexer = Callable[[int], Sequence[int]]


class IncompatibleFilterError(ValueError):
    """Raised when combining filters built with different hash parameters."""


@dataclass(frozen=True)
class Cell:
    count: int
    val: int
    ch: int

    @property
    def is_zero(self) -> bool:
        return self.count == 0 and self.val == 0 and self.ch == 0


class Ibf:
    """Array of ``N`` cells ``(count, val, ch)`` split into ``h`` disjoint blocks.

    ``indexer`` overrides the cell placement (``x -> h indices``); it exists so
    tests can force specific collision patterns. Checksums always come from
    ``spec``.
    """

    def __init__(self, spec: HashSpec, indexer: Optional[Indexer] = None):
        self.spec = spec
        self.indexer = indexer
        self.counts = [0] * spec.N
        self.vals = [0] * spec.N
        self.chs = [0] * spec.N
        self.f = 0

    def _indices(self, x: int) -> Sequence[int]:
        if self.indexer is not None:
            return self.indexer(x)
        return self.spec.cell_indices(x)

    def _apply(self, x: int, sign: int) -> None:
        if not 0 <= x < MODULUS:
            raise ValueError(f"element out of field range: {x}")
        c = self.spec.checksum(x)
        for j in self._indices(x):
            self.counts[j] += sign
            self.vals[j] = (self.vals[j] + sign * x) % MODULUS
            self.chs[j] = (self.chs[j] + sign * c) & CHECKSUM_MASK

    def insert(self, x: int) -> "Ibf":
        self._apply(x, 1)
        self.f += 1
        return self

    def remove(self, x: int, member: bool = True) -> "Ibf":
        """Remove ``x``. Non-members are allowed and drive counts negative.

        ``f`` is only decremented when ``member`` is true.
        """
        self._apply(x, -1)
        if member:
            self.f -= 1
        return self

    def update(self, xs: Iterable[int]) -> "Ibf":
        for x in xs:
            self.insert(x)
        return self

    def copy(self) -> "Ibf":
        other = Ibf(self.spec, self.indexer)
        other.counts = list(self.counts)
        other.vals = list(self.vals)
        other.chs = list(self.chs)
        other.f = self.f
        return other

    def _check_compatible(self, other: "Ibf") -> None:
        if self.spec != other.spec:
            raise IncompatibleFilterError(
                f"hash parameters differ: {self.spec} vs {other.spec}"
            )

    def __add__(self, other: "Ibf") -> "Ibf":
        self._check_compatible(other)
        out = Ibf(self.spec, self.indexer)
        out.counts = [a + b for a, b in zip(self.counts, other.counts)]
        out.vals = [(a + b) % MODULUS for a, b in zip(self.vals, other.vals)]
        out.chs = [(a + b) & CHECKSUM_MASK for a, b in zip(self.chs, other.chs)]
        out.f = self.f + other.f
        return out

    def __neg__(self) -> "Ibf":
        out = Ibf(self.spec, self.indexer)
        out.counts = [-c for c in self.counts]
        out.vals = [(-v) % MODULUS for v in self.vals]
        out.chs = [(-c) & CHECKSUM_MASK for c in self.chs]
        out.f = -self.f
        return out

    def __sub__(self, other: "Ibf") -> "Ibf":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ibf):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.counts == other.counts
            and self.vals == other.vals
            and self.chs == other.chs
        )

    def __len__(self) -> int:
        return self.spec.N

    def __getitem__(self, j: int) -> Cell:
        return Cell(self.counts[j], self.vals[j], self.chs[j])

    @property
    def cells(self) -> list[Cell]:
        return [self[j] for j in range(self.spec.N)]

    def is_empty(self) -> bool:
        return not any(self.counts) and not any(self.vals) and not any(self.chs)

    def block_totals(self) -> list[int]:
        """Signed count total of each hash block; all equal by construction."""
        if self.spec.layout != "partitioned":
            raise ValueError("block totals need the partitioned layout")
        n_h = self.spec.n_h
        return [sum(self.counts[b * n_h:(b + 1) * n_h]) for b in range(self.spec.h)]

    def __repr__(self) -> str:
        nonzero = sum(1 for c in self.counts if c)
        return f"Ibf(N={self.spec.N}, h={self.spec.h}, f={self.f}, nonzero_cells={nonzero})"

    # wire format

    def to_bytes(self) -> bytes:
        s = self.spec
        if s.layout != "partitioned":
            raise ValueError("only partitioned filters have a wire encoding")
        parts = [HEADER.pack(s.N, s.h, s.seed, s.checksum_seed)]
        for c, v, ch in zip(self.counts, self.vals, self.chs):
            parts.append(struct.pack(">q", c))
            parts.append(encode_element(v))
            parts.append(ch.to_bytes(8, "big"))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ibf":
        if len(data) < HEADER.size:
            raise ValueError("truncated IBF header")
        N, h, seed, checksum_seed = HEADER.unpack_from(data)
        if len(data) != HEADER.size + N * CELL_BYTES:
            raise ValueError(
                f"IBF payload length {len(data)} does not match N={N}"
            )
        ibf = cls(HashSpec(seed=seed, checksum_seed=checksum_seed, h=h, N=N))
        off = HEADER.size
        for j in range(N):
            (ibf.counts[j],) = struct.unpack_from(">q", data, off)
            ibf.vals[j] = decode_element(data[off + 8:off + 8 + ELEMENT_BYTES])
            ibf.chs[j] = int.from_bytes(data[off + 40:off + 48], "big")
            off += CELL_BYTES
        return ibf


def new_ibf(spec: HashSpec, indexer: Optional[Indexer] = None) -> Ibf:
    return Ibf(spec, indexer)


def payload_size(N: int) -> int:
    return HEADER.size + N * CELL_BYTES


@dataclass
class ExtractOutcome:
    """Result of one peeling run. ``extracted`` is in extraction order."""

    extracted: list[tuple[int, int]]
    residual: Ibf
    rate: Fraction = field(default=Fraction(1))

    @property
    def elements(self) -> set[tuple[int, int]]:
        return set(self.extracted)

    @property
    def positive(self) -> list[int]:
        return [x for x, s in self.extracted if s > 0]

    @property
    def negative(self) -> list[int]:
        return [x for x, s in self.extracted if s < 0]

    @property
    def complete(self) -> bool:
        return self.residual.is_empty()


def extraction_rate(extracted: int, f: int) -> Fraction:
    if f == 0:
        return Fraction(1)
    if extracted > f:
        raise ValueError(f"extracted {extracted} exceeds f={f}")
    return Fraction(extracted, f)


def extract_all(
    ibf: Ibf, f: Optional[int] = None, order: Optional[Sequence[int]] = None
) -> ExtractOutcome:
    """Peel every verifiable pure cell until a full pass extracts nothing.

    ``f`` is the number of stored elements used for the rate; defaults to the
    filter's tracked insert count. ``order`` is the cell scan order.
    The input filter is left untouched.
    """
    work = ibf.copy()
    counts, vals, chs = work.counts, work.vals, work.chs
    checksum = work.spec.checksum
    scan = range(work.spec.N) if order is None else order
    extracted: list[tuple[int, int]] = []
    progress = True
    while progress:
        progress = False
        for j in scan:
            c = counts[j]
            if c == 1:
                x = vals[j]
                if checksum(x) != chs[j]:
                    continue
                extracted.append((x, 1))
                work._apply(x, -1)
                progress = True
            elif c == -1:
                x = (-vals[j]) % MODULUS
                if (chs[j] + checksum(x)) & CHECKSUM_MASK:
                    continue
                extracted.append((x, -1))
                work._apply(x, 1)
                progress = True
    if f is None:
        f = max(ibf.f, len(extracted))
    work.f = f - len(extracted)
    return ExtractOutcome(extracted, work, extraction_rate(len(extracted), f))
