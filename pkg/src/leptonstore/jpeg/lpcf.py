"""LPCF coefficient-dump interchange format.

Layout (all little-endian)::

    "LPCF" | u16 version | payload | u32 crc32(payload)

    payload = u16 width | u16 height | u8 ncomp | u8 nquant
              nquant x (u8 id | 64 x u16 zigzag values)
              ncomp  x (u8 id | u8 h | u8 v | u8 quant id | u16 wblocks | u16 hblocks
                        | hblocks*wblocks*64 x i16 raster coefficients)
              u32 header length | header bytes
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import ChecksumMismatch, FormatVersionMismatch, InvalidImage, MalformedStream
from .image import CoefficientImage, Component, QuantTable

MAGIC = b"LPCF"
VERSION = 1


def dump_coefficients(img: CoefficientImage) -> bytes:
    if not img.components:
        raise InvalidImage("image has no components")
    img.validate()
    parts = [struct.pack("<HHBB", img.width, img.height, len(img.components), len(img.quant_tables))]
    for tid in sorted(img.quant_tables):
        parts.append(struct.pack("<B", tid))
        parts.append(img.quant_tables[tid].values.astype("<u2").tobytes())
    for c in img.components:
        parts.append(struct.pack("<BBBBHH", c.component_id, c.h_samp, c.v_samp, c.quant_id,
                                 c.width_blocks, c.height_blocks))
        parts.append(c.blocks.astype("<i2").tobytes())
    blob = img.header_blob or b""
    parts.append(struct.pack("<I", len(blob)))
    parts.append(blob)
    payload = b"".join(parts)
    return MAGIC + struct.pack("<H", VERSION) + payload + struct.pack("<I", zlib.crc32(payload))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise MalformedStream("truncated LPCF payload")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_coefficients(data: bytes) -> CoefficientImage:
    data = bytes(data)
    if len(data) < 10 or data[:4] != MAGIC:
        raise MalformedStream("not an LPCF file")
    (version,) = struct.unpack("<H", data[4:6])
    if version != VERSION:
        raise FormatVersionMismatch(f"LPCF version {version}, expected {VERSION}")
    payload = data[6:-4]
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumMismatch("LPCF payload checksum mismatch")
    r = _Reader(payload)
    width, height, ncomp, nq = r.unpack("<HHBB")
    qtables = {}
    for _ in range(nq):
        (tid,) = r.unpack("<B")
        qtables[tid] = QuantTable(tid, np.frombuffer(r.take(128), "<u2"))
    comps = []
    for _ in range(ncomp):
        cid, h, v, tq, wb, hb = r.unpack("<BBBBHH")
        blocks = np.frombuffer(r.take(wb * hb * 128), "<i2").astype(np.int16).reshape(hb, wb, 64)
        comps.append(Component(cid, h, v, tq, blocks))
    (blob_len,) = r.unpack("<I")
    blob = r.take(blob_len)
    if r.pos != len(payload):
        raise MalformedStream("trailing bytes in LPCF payload")
    return CoefficientImage(width, height, comps, qtables, blob).validate()
