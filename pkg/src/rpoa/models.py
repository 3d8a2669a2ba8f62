"""Chain data model and canonical byte encoding.

Every hashable structure has exactly one byte representation. Integers
are little-endian and fixed width, strings are UTF-8 with a u32 length
prefix, and real-valued fields are IEEE-754 doubles (little-endian).
Field order is fixed as declared below and must never change once a
chain exists.

Transaction encoding:
    kind          u8 (0 = transfer, 1 = service)
    sender        u32 length + UTF-8 bytes
    receiver      u32 length + UTF-8 bytes
    amount        f64
    worth         f64
    miner_wage    f64
    nonce         u64

Header encoding (digest width is hash_bits / 8 bytes):
    parent_hash   raw digest
    body_hash     raw digest
    height        u64
    timestamp     u64, milliseconds
    miner         u32 length + UTF-8 bytes
    psi_claimed   f64
    nonce         u64

A block body hash is SHA-256 over the u32 transaction count followed by
each transaction's length-prefixed encoding, truncated to the digest
width. Header hashes are SHA-256 over the header encoding, truncated
the same way.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Iterable

__all__ = [
    "TRANSFER",
    "SERVICE",
    "Transaction",
    "BlockHeader",
    "Block",
    "header_hash",
    "body_hash",
    "digest_size",
]

TRANSFER = "transfer"
SERVICE = "service"

_KIND_CODES = {TRANSFER: 0, SERVICE: 1}


def digest_size(hash_bits: int) -> int:
    """Digest width in bytes for a hash of ``hash_bits`` bits."""
    if hash_bits < 8 or hash_bits % 8 != 0 or hash_bits > 256:
        raise ValueError(f"hash_bits must be a multiple of 8 in [8, 256], got {hash_bits!r}")
    return hash_bits // 8


def _pack_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


@dataclass(frozen=True)
class Transaction:
    """A transfer (moves ``amount`` to ``receiver``) or a service
    transaction (carries ``worth``, accrues activity to the sender).
    ``miner_wage`` is an optional tip paid to the including miner."""

    kind: str
    sender: str
    nonce: int
    receiver: str = ""
    amount: float = 0.0
    worth: float = 0.0
    miner_wage: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown transaction kind {self.kind!r}")
        if not self.sender:
            raise ValueError("transaction must name a sender")
        if self.kind == TRANSFER and not self.receiver:
            raise ValueError("transfer must name a receiver")
        if self.nonce < 0:
            raise ValueError(f"nonce must be >= 0, got {self.nonce!r}")
        for name in ("amount", "worth", "miner_wage"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"transaction {name} must be finite and >= 0, got {value!r}")

    def to_bytes(self) -> bytes:
        return b"".join(
            (
                struct.pack("<B", _KIND_CODES[self.kind]),
                _pack_str(self.sender),
                _pack_str(self.receiver),
                struct.pack("<d", self.amount),
                struct.pack("<d", self.worth),
                struct.pack("<d", self.miner_wage),
                struct.pack("<Q", self.nonce),
            )
        )


@dataclass(frozen=True)
class BlockHeader:
    """Block linkage and mining metadata.

    ``psi_claimed`` is the miner's own total activity used for the
    mining threshold; it is redundant with chain state and exists so
    validators can audit the claim. ``timestamp`` is in seconds,
    millisecond resolution.
    """

    parent_hash: bytes
    body_hash: bytes
    height: int
    timestamp: float
    miner: str
    psi_claimed: float
    nonce: int = 0

    def __post_init__(self) -> None:
        if self.height < 0:
            raise ValueError(f"height must be >= 0, got {self.height!r}")
        if len(self.parent_hash) != len(self.body_hash):
            raise ValueError("parent_hash and body_hash must have equal digest width")
        if not (math.isfinite(self.psi_claimed) and self.psi_claimed >= 1.0):
            raise ValueError(f"psi_claimed must be >= 1, got {self.psi_claimed!r}")
        if not (math.isfinite(self.timestamp) and self.timestamp >= 0):
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp!r}")

    def timestamp_ms(self) -> int:
        return round(self.timestamp * 1000)

    def to_bytes(self) -> bytes:
        return b"".join(
            (
                self.parent_hash,
                self.body_hash,
                struct.pack("<Q", self.height),
                struct.pack("<Q", self.timestamp_ms()),
                _pack_str(self.miner),
                struct.pack("<d", self.psi_claimed),
                struct.pack("<Q", self.nonce),
            )
        )


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()

    def to_bytes(self) -> bytes:
        return self.header.to_bytes() + _encode_body(self.transactions)


def _encode_body(transactions: Iterable[Transaction]) -> bytes:
    parts = [b""]  # placeholder for the count prefix
    count = 0
    for tx in transactions:
        raw = tx.to_bytes()
        parts.append(struct.pack("<I", len(raw)) + raw)
        count += 1
    parts[0] = struct.pack("<I", count)
    return b"".join(parts)


def body_hash(transactions: Iterable[Transaction], hash_bits: int = 256) -> bytes:
    """Digest of a block body, truncated to the configured width."""
    return hashlib.sha256(_encode_body(transactions)).digest()[: digest_size(hash_bits)]


def header_hash(header: BlockHeader, hash_bits: int = 256) -> bytes:
    """Digest of a header, truncated to the configured width.

    This is the value the mining inequality constrains.
    """
    return hashlib.sha256(header.to_bytes()).digest()[: digest_size(hash_bits)]
