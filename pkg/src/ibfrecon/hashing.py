"""SHA-256 based hash family, checksums and set digests over a 256-bit prime field.

Byte layouts (all integers big-endian):

    cell index  sha256(seed:u32 || b"ix" || i:u16 || x:32B)  mod n_h
                (layout "distinct": mod N-i+1, ranked among still-free cells)
    checksum    sha256(checksum_seed:u32 || b"ch" || x:32B)  first 8 bytes
    set hash    sha256(x_1:32B || x_2:32B || ...)            sorted ascending
    seed        sha256(b"seed" || master:u64 || labels...)   truncated
"""
from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

MODULUS = 115792089237316195423570985008687907853269984665640564039457584007913129640233
BIT_WIDTH = 256
ELEMENT_BYTES = 32
CHECKSUM_MASK = (1 << 64) - 1
# The printed prime is 2**256 + 297, so the top 297 residues do not fit the
# 32-byte encoding. Uniform draws never hit them in practice; encoding rejects them.
ENCODABLE = 1 << (8 * ELEMENT_BYTES)


@dataclass(frozen=True)
class FieldSpec:
    modulus: int = MODULUS
    bit_width: int = BIT_WIDTH

    def contains(self, x: int) -> bool:
        return 0 <= x < self.modulus


FIELD = FieldSpec()


def encode_element(x: int) -> bytes:
    if not 0 <= x < MODULUS:
        raise ValueError(f"element out of field range: {x}")
    if x >= ENCODABLE:
        raise ValueError("element does not fit the 32-byte encoding")
    return x.to_bytes(ELEMENT_BYTES, "big")


def decode_element(data: bytes) -> int:
    if len(data) != ELEMENT_BYTES:
        raise ValueError("element encoding must be 32 bytes")
    x = int.from_bytes(data, "big")
    if x >= MODULUS:
        raise ValueError("decoded element is not reduced modulo the field prime")
    return x


def _check_u32(name: str, value: int) -> None:
    if not 0 <= value < 1 << 32:
        raise ValueError(f"{name} must be a 32-bit unsigned integer, got {value}")


@dataclass(frozen=True)
class HashSpec:
    """Parameters of one hash family instance: ``h`` functions over ``N`` cells.

    Function ``i`` (1-based) owns the cell block ``[(i-1)*n_h, i*n_h)`` so that
    the images of different functions never overlap. The ``"distinct"`` layout
    instead draws ``h`` different cells from the whole array; it still gives
    every element ``h`` separate cells but has no block structure and is not
    part of the wire format.
    """

    seed: int
    checksum_seed: int
    h: int
    N: int
    layout: str = "partitioned"

    def __post_init__(self):
        _check_u32("seed", self.seed)
        _check_u32("checksum_seed", self.checksum_seed)
        if self.h < 1 or self.h >= 1 << 16:
            raise ValueError(f"h must be in [1, 65535], got {self.h}")
        if self.N < 1 or self.N >= 1 << 32:
            raise ValueError(f"N must be in [1, 2**32), got {self.N}")
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.layout == "partitioned" and self.N % self.h:
            raise ValueError(f"N={self.N} is not divisible by h={self.h}")
        if self.h > self.N:
            raise ValueError("need at least one cell per hash function")

    @property
    def n_h(self) -> int:
        return self.N // self.h

    def cell_index(self, i: int, x: int) -> int:
        return cell_index(self, i, x)

    def cell_indices(self, x: int) -> list[int]:
        """Indices of the ``h`` distinct cells touched by ``x``."""
        xb = encode_element(x)
        base = _index_prefix(self.seed)
        digests = []
        for i in range(1, self.h + 1):
            hs = base.copy()
            hs.update(i.to_bytes(2, "big"))
            hs.update(xb)
            digests.append(int.from_bytes(hs.digest(), "big"))
        if self.layout == "partitioned":
            n_h = self.n_h
            return [i * n_h + v % n_h for i, v in enumerate(digests)]
        taken: list[int] = []
        for i, v in enumerate(digests):
            r = v % (self.N - i)
            # r-th free cell in increasing order
            for t in sorted(taken):
                if t <= r:
                    r += 1
            taken.append(r)
        return taken

    def checksum(self, x: int) -> int:
        return checksum_value(self.checksum_seed, x)


LAYOUTS = ("partitioned", "distinct")


@lru_cache(maxsize=1024)
def _index_prefix(seed: int):
    return hashlib.sha256(seed.to_bytes(4, "big") + b"ix")


def cell_index(spec: HashSpec, i: int, x: int) -> int:
    """0-based cell index of ``x`` under hash function ``i`` (1-based)."""
    if not 1 <= i <= spec.h:
        raise ValueError(f"hash function index {i} outside [1, {spec.h}]")
    if spec.layout != "partitioned":
        return spec.cell_indices(x)[i - 1]
    hs = _index_prefix(spec.seed).copy()
    hs.update(i.to_bytes(2, "big"))
    hs.update(encode_element(x))
    return (i - 1) * spec.n_h + int.from_bytes(hs.digest(), "big") % spec.n_h


@lru_cache(maxsize=1 << 16)
def checksum_value(checksum_seed: int, x: int) -> int:
    digest = hashlib.sha256(
        checksum_seed.to_bytes(4, "big") + b"ch" + encode_element(x)
    ).digest()
    return int.from_bytes(digest[:8], "big")


def checksum(spec: HashSpec, x: int) -> int:
    return checksum_value(spec.checksum_seed, x)


def set_hash(elements: Iterable[int]) -> bytes:
    """Order-independent 32-byte digest of a set of field elements."""
    hs = hashlib.sha256()
    for x in sorted(set(elements)):
        hs.update(encode_element(x))
    return hs.digest()


def derive_seed(master_seed: int, *labels, bits: int = 32) -> int:
    """Deterministic sub-seed from a 64-bit master seed and a label path.

    Labels may be ints (encoded as u64) or strings.
    """
    hs = hashlib.sha256(b"seed" + struct.pack(">Q", master_seed & (2**64 - 1)))
    for label in labels:
        if isinstance(label, str):
            raw = label.encode()
            hs.update(b"s" + len(raw).to_bytes(2, "big") + raw)
        else:
            hs.update(b"i" + struct.pack(">Q", int(label) & (2**64 - 1)))
    return int.from_bytes(hs.digest(), "big") >> (256 - bits)


def sample_distinct_elements(rng_seed: int, count: int) -> list[int]:
    """``count`` distinct uniform field elements, reproducible from ``rng_seed``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = random.Random(rng_seed)
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < count:
        x = rng.randrange(MODULUS)
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out
