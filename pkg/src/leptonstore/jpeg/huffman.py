"""Baseline Huffman tables: lookup construction, scan decoding, encoding.

``decode_segment`` here is the pure-Python twin of the compiled kernel of
the same name; both fill ``coef`` in place and must agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MalformedStream
from .image import ZIGZAG


@dataclass
class HuffTable:
    counts: tuple  # 16 entries: number of codes of length 1..16
    symbols: bytes

    def __post_init__(self):
        if len(self.counts) != 16 or sum(self.counts) != len(self.symbols):
            raise MalformedStream("inconsistent DHT")
        if len(self.symbols) > 256:
            raise MalformedStream("DHT with more than 256 symbols")

    def codes(self):
        """Yield (symbol, code, length) in canonical order."""
        code = 0
        k = 0
        for length in range(1, 17):
            for _ in range(self.counts[length - 1]):
                if code >= (1 << length):
                    raise MalformedStream("over-subscribed Huffman table")
                yield self.symbols[k], code, length
                code += 1
                k += 1
            code <<= 1

    def lookup(self):
        """16-bit peek table: returns (lengths, symbols) uint8 arrays of size 65536."""
        lengths = np.zeros(65536, dtype=np.uint8)
        symbols = np.zeros(65536, dtype=np.uint8)
        for sym, code, length in self.codes():
            lo = code << (16 - length)
            hi = lo + (1 << (16 - length))
            lengths[lo:hi] = length
            symbols[lo:hi] = sym
        return lengths, symbols

    def encoder(self):
        """symbol -> (code, length) as two 256-entry arrays; length 0 = absent."""
        code_of = np.zeros(256, dtype=np.uint32)
        len_of = np.zeros(256, dtype=np.uint8)
        for sym, code, length in self.codes():
            code_of[sym] = code
            len_of[sym] = length
        return code_of, len_of

    def segment_payload(self, table_class: int, table_id: int) -> bytes:
        return bytes([(table_class << 4) | table_id, *self.counts]) + bytes(self.symbols)


def decode_segment(data, blk_table, blk_dst, dc_len, dc_sym, ac_len, ac_sym, coef, dc_pred):
    """Decode ``len(blk_dst)`` blocks from one unstuffed restart segment.

    blk_table[i] selects which lookup tables (row of dc_len/dc_sym/...) and
    which DC predictor slot block i uses; blk_dst[i] is the block's row in
    ``coef`` (shape (nblocks, 64), raster order). DC predictors in dc_pred
    are updated in place. Returns the number of bits consumed.
    """
    n = len(data)
    total_bits = 8 * n
    acc = 0
    nacc = 0
    pos = 0
    consumed = 0
    zz = ZIGZAG.tolist()
    dc_len = [bytes(row) for row in dc_len]
    dc_sym = [bytes(row) for row in dc_sym]
    ac_len = [bytes(row) for row in ac_len]
    ac_sym = [bytes(row) for row in ac_sym]

    for i in range(len(blk_dst)):
        t = int(blk_table[i])
        dl = dc_len[t]
        ds = dc_sym[t]
        al = ac_len[t]
        asym = ac_sym[t]

        blk = [0] * 64

        if nacc < 32:
            while nacc < 40:
                acc = (acc << 8) | (data[pos] if pos < n else 0xFF)
                pos += 1
                nacc += 8
            acc &= (1 << nacc) - 1
        peek = (acc >> (nacc - 16)) & 0xFFFF
        length = dl[peek]
        if length == 0:
            raise MalformedStream("invalid DC Huffman code")
        s = ds[peek]
        nacc -= length
        consumed += length
        if s > 11:
            raise MalformedStream(f"DC category {s}")
        diff = 0
        if s:
            bits = (acc >> (nacc - s)) & ((1 << s) - 1)
            nacc -= s
            consumed += s
            diff = bits if bits >> (s - 1) else bits - (1 << s) + 1
        pred = int(dc_pred[t]) + diff
        if not -32768 <= pred <= 32767:
            raise MalformedStream("DC value out of range")
        dc_pred[t] = pred
        blk[0] = pred

        k = 1
        while k < 64:
            if nacc < 32:
                while nacc < 40:
                    acc = (acc << 8) | (data[pos] if pos < n else 0xFF)
                    pos += 1
                    nacc += 8
                acc &= (1 << nacc) - 1
            peek = (acc >> (nacc - 16)) & 0xFFFF
            length = al[peek]
            if length == 0:
                raise MalformedStream("invalid AC Huffman code")
            rs = asym[peek]
            nacc -= length
            consumed += length
            r = rs >> 4
            s = rs & 15
            if s == 0:
                if r == 15:
                    k += 16
                    continue
                break
            k += r
            if k > 63:
                raise MalformedStream("AC run past end of block")
            bits = (acc >> (nacc - s)) & ((1 << s) - 1)
            nacc -= s
            consumed += s
            blk[zz[k]] = bits if bits >> (s - 1) else bits - (1 << s) + 1
            k += 1
        if k > 64:
            raise MalformedStream("AC run past end of block")
        coef[int(blk_dst[i])] = blk
        if consumed > total_bits:
            raise MalformedStream("truncated scan")
    return consumed


# -- encoding ---------------------------------------------------------------

def magnitude_category(v: int) -> int:
    return abs(int(v)).bit_length()


def block_symbols(block, prev_dc):
    """Huffman symbols of one raster-order block as (symbol, value) pairs.

    The first pair is the DC category and difference; ZRL/EOB carry None.
    """
    zz = block[ZIGZAG]
    diff = int(zz[0]) - prev_dc
    out = [(magnitude_category(diff), diff)]
    run = 0
    last = 63
    while last > 0 and zz[last] == 0:
        last -= 1
    for k in range(1, last + 1):
        v = int(zz[k])
        if v == 0:
            run += 1
            continue
        while run > 15:
            out.append((0xF0, None))
            run -= 16
        out.append(((run << 4) | magnitude_category(v), v))
        run = 0
    if last < 63:
        out.append((0x00, None))
    return out


def optimal_table(freq) -> HuffTable:
    """Length-limited (16 bit) Huffman table from symbol frequencies.

    Standard JPEG procedure: a reserved pseudo-symbol guarantees no code of
    all ones, then code lengths above 16 are folded back.
    """
    freq = [int(f) for f in freq] + [1]  # index 256 is the reserved symbol
    nsym = len(freq)
    codesize = [0] * nsym
    others = [-1] * nsym
    freq = freq[:]
    while True:
        c1 = c2 = -1
        v1 = v2 = None
        for i, f in enumerate(freq):
            if f <= 0:
                continue
            if v1 is None or f <= v1:
                c2, v2 = c1, v1
                c1, v1 = i, f
            elif v2 is None or f <= v2:
                c2, v2 = i, f
        if c2 < 0:
            break
        freq[c1] += freq[c2]
        freq[c2] = 0
        codesize[c1] += 1
        while others[c1] >= 0:
            c1 = others[c1]
            codesize[c1] += 1
        others[c1] = c2
        codesize[c2] += 1
        while others[c2] >= 0:
            c2 = others[c2]
            codesize[c2] += 1

    bits = [0] * 33
    for i in range(nsym):
        if codesize[i]:
            bits[codesize[i]] += 1
    i = 32
    while i > 16:
        while bits[i] > 0:
            j = i - 2
            while bits[j] == 0:
                j -= 1
            bits[i] -= 2
            bits[i - 1] += 1
            bits[j + 1] += 2
            bits[j] -= 1
        i -= 1
    while bits[i] == 0:
        i -= 1
    bits[i] -= 1  # drop the reserved symbol

    order = sorted((codesize[s], s) for s in range(256) if codesize[s])
    symbols = bytes(s for _, s in order)
    return HuffTable(tuple(bits[1:17]), symbols)


class BitWriter:
    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, value: int, nbits: int):
        if nbits == 0:
            return
        self.acc = (self.acc << nbits) | (value & ((1 << nbits) - 1))
        self.nbits += nbits
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0)
        self.acc &= (1 << self.nbits) - 1

    def flush(self) -> bytes:
        if self.nbits:
            self.write((1 << (8 - self.nbits)) - 1, 8 - self.nbits)
        return bytes(self.out)
