"""LEPS compressed container.

Layout (little-endian)::

    "LEPS" | u16 version | u8 mode | u32 tables hash
    | u16 width | u16 height | u8 ncomp
    | ncomp x (u8 id | u8 h | u8 v | u8 quant id | u16 wblocks | u16 hblocks)
    | u8 nquant | nquant x (u8 id | 64 x u16)
    | u32 header length | header bytes
    | u32 payload length | payload
    | u32 crc32(everything before this field)

``mode`` is 0 for a bounded encode, 1 for an unbounded re-encode after a
bounded attempt overflowed, 2 for a plain unbounded encode. The tables
hash is 0 for the unbounded modes.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import ChecksumMismatch, CorruptStream, FormatVersionMismatch
from ..jpeg.image import QuantTable

MAGIC = b"LEPS"
VERSION = 1

BOUNDED = 0
UNBOUNDED_FALLBACK = 1
UNBOUNDED = 2
MODE_NAMES = {BOUNDED: "BOUNDED", UNBOUNDED_FALLBACK: "UNBOUNDED_FALLBACK", UNBOUNDED: "UNBOUNDED"}


@dataclass
class Container:
    mode: int
    tables_hash: int
    width: int
    height: int
    components: list      # (id, h, v, quant id, wblocks, hblocks)
    quant_tables: dict    # id -> QuantTable
    header_blob: bytes
    payload: bytes

    @property
    def mode_name(self) -> str:
        return MODE_NAMES[self.mode]

    @property
    def shapes(self):
        return [(hb, wb) for _, _, _, _, wb, hb in self.components]

    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<HBI", VERSION, self.mode, self.tables_hash),
                 struct.pack("<HHB", self.width, self.height, len(self.components))]
        for comp in self.components:
            parts.append(struct.pack("<BBBBHH", *comp))
        parts.append(struct.pack("<B", len(self.quant_tables)))
        for tid in sorted(self.quant_tables):
            parts.append(struct.pack("<B", tid) + self.quant_tables[tid].values.astype("<u2").tobytes())
        parts.append(struct.pack("<I", len(self.header_blob)) + self.header_blob)
        parts.append(struct.pack("<I", len(self.payload)) + self.payload)
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body))


def parse_container(data: bytes) -> Container:
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise CorruptStream("not a LEPS container")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise CorruptStream("truncated LEPS container")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    def raw(n):
        nonlocal pos
        if pos + n > len(data):
            raise CorruptStream("truncated LEPS container")
        out = data[pos:pos + n]
        pos += n
        return out

    version, mode, thash = take("<HBI")
    if version != VERSION:
        raise FormatVersionMismatch(f"LEPS version {version}, expected {VERSION}")
    if mode not in MODE_NAMES:
        raise CorruptStream(f"unknown container mode {mode}")
    width, height, ncomp = take("<HHB")
    comps = [take("<BBBBHH") for _ in range(ncomp)]
    (nq,) = take("<B")
    qt = {}
    for _ in range(nq):
        (tid,) = take("<B")
        qt[tid] = QuantTable(tid, np.frombuffer(raw(128), "<u2"))
    (blen,) = take("<I")
    blob = raw(blen)
    (plen,) = take("<I")
    payload = raw(plen)
    (crc,) = take("<I")
    if pos != len(data):
        raise CorruptStream("trailing bytes after LEPS container")
    if zlib.crc32(data[:-4]) != crc:
        raise ChecksumMismatch("LEPS checksum mismatch")
    return Container(mode, thash, width, height, comps, qt, blob, payload)
