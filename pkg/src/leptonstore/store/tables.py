"""Allocation tables and the LPTB table-set file.

LPTB layout (little-endian)::

    "LPTB" | u16 version | u32 count | count x record | u32 content hash | u32 crc32(all preceding bytes)

    record = u8 name length | name | u8 kind (0 original, 1 optimized)
             | u32 index range | u32 depth | u32 ways
             | u32 boundary count | boundaries (u32 each)
             | u32 weight count | weight count x (u32 index | f64 weight)

The content hash covers everything that changes how indexes map to slots
(name, kind, range, depth, ways, boundaries) and is what a compressed
container records; the audit weights are excluded from it.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ChecksumMismatch, DegenerateProfile, FormatVersionMismatch, InvariantViolation, \
    MalformedStream
from .hashing import build_hash, build_weights, derive_boundaries, tag_width

MAGIC = b"LPTB"
VERSION = 1

ORIGINAL = "original"
OPTIMIZED = "optimized"


@dataclass
class AllocationTable:
    model: str
    index_range: int
    mem_depth: int
    ways: int
    boundaries: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    weights: np.ndarray | None = None
    kind: str = OPTIMIZED

    def __post_init__(self):
        self.boundaries = np.asarray(self.boundaries, dtype=np.int64)

    @classmethod
    def identity(cls, model: str, index_range: int) -> AllocationTable:
        """Dedicated slot per index (the unoptimised layout)."""
        return cls(model, index_range, index_range, 1, kind=ORIGINAL)

    @property
    def sets(self) -> int:
        return self.mem_depth // self.ways if self.kind == OPTIMIZED else self.index_range

    @property
    def interval_starts(self) -> np.ndarray:
        if self.kind == ORIGINAL:
            return np.arange(self.index_range, dtype=np.int64)
        return np.concatenate([[0], self.boundaries]).astype(np.int64)

    @property
    def interval_widths(self) -> np.ndarray:
        starts = self.interval_starts
        return np.diff(np.concatenate([starts, [self.index_range]]))

    @property
    def tag_widths(self) -> list[int]:
        return [tag_width(int(w)) for w in self.interval_widths]

    @property
    def hash_values(self) -> np.ndarray | None:
        if self.weights is None:
            return None
        return build_hash(self.weights, self.mem_depth)

    def set_of(self, index) -> np.ndarray | int:
        """Set index for a flat index (or an array of them)."""
        if self.kind == ORIGINAL:
            return index
        return np.searchsorted(self.boundaries, index, side="right")

    def validate(self):
        if self.index_range < 1 or self.ways < 1 or self.mem_depth < 1:
            raise InvariantViolation(f"{self.model}: non-positive range/depth/ways")
        if self.kind == ORIGINAL:
            if self.mem_depth != self.index_range or self.ways != 1 or self.boundaries.size:
                raise InvariantViolation(f"{self.model}: original table must be direct-mapped")
        elif self.kind == OPTIMIZED:
            if self.mem_depth % self.ways:
                raise InvariantViolation(f"{self.model}: depth {self.mem_depth} not a multiple of {self.ways}")
            b = self.boundaries
            if b.size != self.sets - 1:
                raise InvariantViolation(f"{self.model}: {b.size} boundaries for {self.sets} sets")
            if b.size and (np.any(np.diff(b) < 0) or b[0] < 0 or b[-1] > self.index_range):
                raise InvariantViolation(f"{self.model}: boundaries out of order or range")
        else:
            raise InvariantViolation(f"{self.model}: unknown kind {self.kind!r}")
        if self.weights is not None:
            w = self.weights
            if w.size != self.index_range or np.any(w < 0):
                raise InvariantViolation(f"{self.model}: bad audit weights")
        return self

    def definition_bytes(self) -> bytes:
        name = self.model.encode()
        return (struct.pack("<B", len(name)) + name
                + struct.pack("<BIII", 1 if self.kind == OPTIMIZED else 0,
                              self.index_range, self.mem_depth, self.ways)
                + struct.pack("<I", self.boundaries.size) + self.boundaries.astype("<u4").tobytes())

    def __eq__(self, other):
        if not isinstance(other, AllocationTable):
            return NotImplemented
        same_w = (self.weights is None and other.weights is None) or (
            self.weights is not None and other.weights is not None
            and np.array_equal(self.weights, other.weights))
        return (self.definition_bytes() == other.definition_bytes()) and same_w


def build_table(model: str, P, mem_depth: int, ways: int) -> AllocationTable:
    """Set-associative table for one model from its access probabilities."""
    P = np.asarray(P, dtype=np.float64)
    index_range = P.size
    if mem_depth >= index_range:
        # enough memory for every index: direct mapping never overflows
        return AllocationTable.identity(model, index_range)
    if mem_depth % ways:
        from ..errors import IndivisibleDepth
        raise IndivisibleDepth(f"depth {mem_depth} is not a multiple of {ways} ways")
    W = build_weights(P, mem_depth)
    bnd = derive_boundaries(build_hash(W, mem_depth), ways, mem_depth)
    return AllocationTable(model, index_range, mem_depth, ways, bnd, W, OPTIMIZED)


class TableSet(dict):
    """Model name -> AllocationTable. Models without an entry are direct-mapped."""

    def content_hash(self) -> int:
        crc = 0
        for name in sorted(self):
            crc = zlib.crc32(self[name].definition_bytes(), crc)
        return crc

    def validate(self):
        for t in self.values():
            t.validate()
        return self


def save_tables(tables) -> bytes:
    tables = TableSet(tables).validate()
    parts = [MAGIC, struct.pack("<HI", VERSION, len(tables))]
    for name in sorted(tables):
        t = tables[name]
        parts.append(t.definition_bytes())
        if t.weights is None:
            parts.append(struct.pack("<I", 0))
        else:
            nz = np.flatnonzero(t.weights)
            rec = np.zeros(nz.size, dtype=[("i", "<u4"), ("w", "<f8")])
            rec["i"] = nz
            rec["w"] = t.weights[nz]
            parts.append(struct.pack("<I", nz.size) + rec.tobytes())
    parts.append(struct.pack("<I", tables.content_hash()))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def load_tables(data: bytes) -> TableSet:
    data = bytes(data)
    if len(data) < 18 or data[:4] != MAGIC:
        raise MalformedStream("not an LPTB file")
    version, count = struct.unpack("<HI", data[4:10])
    if version != VERSION:
        raise FormatVersionMismatch(f"LPTB version {version}, expected {VERSION}")
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc:
        raise ChecksumMismatch("LPTB file checksum mismatch")
    pos = 10
    out = TableSet()

    def take(n):
        nonlocal pos
        if pos + n > len(data) - 8:
            raise MalformedStream("truncated LPTB record")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    for _ in range(count):
        (nlen,) = struct.unpack("<B", take(1))
        name = take(nlen).decode()
        kind, rng, depth, ways = struct.unpack("<BIII", take(13))
        (nb,) = struct.unpack("<I", take(4))
        bnd = np.frombuffer(take(4 * nb), "<u4").astype(np.int64)
        (nw,) = struct.unpack("<I", take(4))
        weights = None
        if nw:
            rec = np.frombuffer(take(12 * nw), dtype=[("i", "<u4"), ("w", "<f8")])
            if rec["i"].size and rec["i"].max() >= rng:
                raise InvariantViolation(f"{name}: weight index out of range")
            weights = np.zeros(rng, np.float64)
            weights[rec["i"]] = rec["w"]
        t = AllocationTable(name, rng, depth, ways, bnd, weights, OPTIMIZED if kind else ORIGINAL)
        out[name] = t.validate()
    if pos != len(data) - 8:
        raise MalformedStream("trailing bytes in LPTB file")
    (stored_hash,) = struct.unpack("<I", data[-8:-4])
    if stored_hash != out.content_hash():
        raise InvariantViolation("LPTB content hash does not match its records")
    return out


def degenerate_fallback(model: str, index_range: int) -> AllocationTable:
    """Table used when a profile has no mass: keep the original layout."""
    return AllocationTable.identity(model, index_range)


__all__ = [
    "AllocationTable", "TableSet", "build_table", "save_tables", "load_tables", "ORIGINAL", "OPTIMIZED",
    "DegenerateProfile", "degenerate_fallback",
]
