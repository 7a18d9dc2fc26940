"""Two-party set reconciliation over an in-process, ordered, loss-free transport.

Every message goes through its byte encoding on the way, so the wire format is
exercised by every session:

    tag 0x01 SetHash        32-byte digest
    tag 0x02 IbfPayload     serialized Ibf (header carries N, h and both seeds)
    tag 0x03 DeltaElements  u32 count, then count * 32-byte elements
    tag 0x04 Done           no payload
"""
from __future__ import annotations

import enum
import struct
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from .hashing import ELEMENT_BYTES, HashSpec, decode_element, derive_seed, encode_element, set_hash
from .ibf import Ibf, extract_all
from .thresholds import cells_for

TAG_SET_HASH = 0x01
TAG_IBF = 0x02
TAG_DELTA = 0x03
TAG_DONE = 0x04


@dataclass(frozen=True)
class SetHash:
    digest: bytes


@dataclass(frozen=True)
class IbfPayload:
    ibf: Ibf


@dataclass(frozen=True)
class DeltaElements:
    elements: tuple[int, ...]


@dataclass(frozen=True)
class Done:
    pass


Message = Union[SetHash, IbfPayload, DeltaElements, Done]


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, SetHash):
        if len(msg.digest) != 32:
            raise ValueError("set hash digest must be 32 bytes")
        return bytes([TAG_SET_HASH]) + msg.digest
    if isinstance(msg, IbfPayload):
        return bytes([TAG_IBF]) + msg.ibf.to_bytes()
    if isinstance(msg, DeltaElements):
        body = b"".join(encode_element(x) for x in msg.elements)
        return bytes([TAG_DELTA]) + struct.pack(">I", len(msg.elements)) + body
    if isinstance(msg, Done):
        return bytes([TAG_DONE])
    raise TypeError(f"not a protocol message: {msg!r}")


def decode_message(data: bytes) -> Message:
    if not data:
        raise ValueError("empty message")
    tag, body = data[0], data[1:]
    if tag == TAG_SET_HASH:
        if len(body) != 32:
            raise ValueError("set hash payload must be 32 bytes")
        return SetHash(body)
    if tag == TAG_IBF:
        return IbfPayload(Ibf.from_bytes(body))
    if tag == TAG_DELTA:
        (n,) = struct.unpack_from(">I", body)
        if len(body) != 4 + n * ELEMENT_BYTES:
            raise ValueError("element list length mismatch")
        return DeltaElements(tuple(
            decode_element(body[4 + k * ELEMENT_BYTES:4 + (k + 1) * ELEMENT_BYTES])
            for k in range(n)
        ))
    if tag == TAG_DONE:
        if body:
            raise ValueError("Done carries no payload")
        return Done()
    raise ValueError(f"unknown message tag {tag:#x}")


class Mode(str, enum.Enum):
    CLIENT_SERVER = "client_server"
    PEER_TO_PEER = "peer_to_peer"
    ONE_WAY = "one_way"


class Outcome(str, enum.Enum):
    RECONCILED = "reconciled"
    MAX_ROUNDS_EXCEEDED = "max_rounds_exceeded"
    PARTIAL = "partial"


@dataclass
class TranscriptEntry:
    direction: str
    message: Message
    size: int


@dataclass
class RoundRecord:
    round: int
    sender: str
    d_before: int
    d_after: int
    extracted_positive: int
    extracted_negative: int
    ibf_bytes: int


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    rounds: int = 0
    outcome: Outcome = Outcome.PARTIAL
    round_log: list[RoundRecord] = field(default_factory=list)

    @property
    def total_bytes(self) -> int:
        return sum(e.size for e in self.entries)

    def ibf_senders(self) -> list[str]:
        return [e.direction[0] for e in self.entries if isinstance(e.message, IbfPayload)]


class Transport:
    """Ordered in-memory delivery between parties ``A`` and ``B``; logs every message."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.queues: dict[str, deque] = {"A": deque(), "B": deque()}

    def send(self, sender: str, receiver: str, msg: Message) -> None:
        data = encode_message(msg)
        self.transcript.entries.append(TranscriptEntry(f"{sender}->{receiver}", msg, len(data)))
        self.queues[receiver].append(data)

    def recv(self, party: str) -> Message:
        return decode_message(self.queues[party].popleft())


def _other(role: str) -> str:
    return "B" if role == "A" else "A"


def _validate(N: int, h: int) -> None:
    if h < 1 or N % h:
        raise ValueError(f"N={N} must be a positive multiple of h={h}")
    if N // h < 2:
        raise ValueError("termination needs at least two cells per hash block")


def run_single_round(S_A: Iterable[int], S_B: Iterable[int], d_estimate: int, h: int,
                     seed: int = 0) -> tuple[set[int], set[int], Transcript]:
    """One exchange of filters sized ``ceil(c_h * d_estimate)`` (rounded up to a multiple of h)."""
    if d_estimate < 1:
        raise ValueError("d_estimate must be at least 1")
    if h < 2:
        raise ValueError("h must be at least 2")
    sets = {"A": set(S_A), "B": set(S_B)}
    N = cells_for(d_estimate, h)
    transcript = Transcript()
    link = Transport(transcript)
    spec = HashSpec(seed=derive_seed(seed, "ibf"), checksum_seed=derive_seed(seed, "checksum"), h=h, N=N)
    d_before = len(sets["A"] ^ sets["B"])

    filters = {p: Ibf(spec).update(sets[p]) for p in "AB"}
    link.send("A", "B", IbfPayload(filters["A"]))
    link.send("B", "A", IbfPayload(filters["B"]))
    at_b = extract_all(link.recv("B").ibf - filters["B"])
    at_a = extract_all(filters["A"] - link.recv("A").ibf)
    sets["B"].update(at_b.positive)
    sets["A"].update(at_a.negative)

    transcript.rounds = 1
    transcript.round_log.append(RoundRecord(
        1, "A", d_before, len(sets["A"] ^ sets["B"]),
        len(at_b.positive), len(at_b.negative), transcript.entries[0].size,
    ))
    transcript.outcome = Outcome.RECONCILED if sets["A"] == sets["B"] else Outcome.PARTIAL
    return sets["A"], sets["B"], transcript


def run_iterative(S_A: Iterable[int], S_B: Iterable[int], N: int, h: int, master_seed: int,
                  max_rounds: int = 100, mode: Union[Mode, str] = Mode.CLIENT_SERVER,
                  ) -> tuple[set[int], set[int], Transcript]:
    """Repeat hash check, filter exchange and partial extraction until the sets agree.

    Each round draws fresh hash seeds from ``master_seed``. ``one_way`` only
    brings B up to date: B recognises its own surplus through negative
    extractions and compares the set hash of the rest against A's.
    """
    mode = Mode(mode)
    _validate(N, h)
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    sets = {"A": set(S_A), "B": set(S_B)}
    surplus: set[int] = set()
    checksum_seed = derive_seed(master_seed, "checksum")
    transcript = Transcript()
    link = Transport(transcript)
    sender, receiver = "A", "B"

    while True:
        link.send(sender, receiver, SetHash(set_hash(sets[sender])))
        digest = link.recv(receiver).digest
        mine = sets[receiver] - surplus if mode is Mode.ONE_WAY else sets[receiver]
        if set_hash(mine) == digest:
            link.send(receiver, sender, Done())
            link.recv(sender)
            transcript.outcome = Outcome.RECONCILED
            break
        if transcript.rounds >= max_rounds:
            transcript.outcome = Outcome.MAX_ROUNDS_EXCEEDED
            break

        transcript.rounds += 1
        d_before = len(sets["A"] ^ sets["B"])
        spec = HashSpec(seed=derive_seed(master_seed, "round", transcript.rounds),
                        checksum_seed=checksum_seed, h=h, N=N)
        link.send(sender, receiver, IbfPayload(Ibf(spec).update(sets[sender])))
        remote = link.recv(receiver).ibf
        ibf_bytes = transcript.entries[-1].size
        out = extract_all(remote - Ibf(remote.spec).update(sets[receiver]))
        sets[receiver].update(out.positive)
        if mode is Mode.CLIENT_SERVER:
            link.send(receiver, sender, DeltaElements(tuple(sorted(out.negative))))
            sets[sender].update(link.recv(sender).elements)
        elif mode is Mode.ONE_WAY:
            surplus.update(out.negative)

        transcript.round_log.append(RoundRecord(
            transcript.rounds, sender, d_before, len(sets["A"] ^ sets["B"]),
            len(out.positive), len(out.negative), ibf_bytes,
        ))
        if mode is Mode.PEER_TO_PEER:
            sender, receiver = receiver, sender

    return sets["A"], sets["B"], transcript


def run_variant(mode: Union[Mode, str], S_A: Iterable[int], S_B: Iterable[int], N: int, h: int,
                master_seed: int, max_rounds: int = 100) -> tuple[set[int], set[int], Transcript]:
    return run_iterative(S_A, S_B, N, h, master_seed, max_rounds, mode=mode)
