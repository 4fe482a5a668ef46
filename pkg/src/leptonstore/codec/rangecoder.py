"""Binary range coder: 32-bit range, byte-wise renormalisation, carry via a cached byte.

Probabilities come straight from a pair of bin counters: the zero branch
gets ``range // (c0 + c1 + 2) * (c0 + 1)`` of the interval.
"""
from __future__ import annotations

TOP = 1 << 24
MASK32 = 0xFFFFFFFF


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > MASK32:
            carry = low >> 32
            temp = self.cache
            while True:
                self.out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if not self.cache_size:
                    break
            self.cache = (low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (low & 0x00FFFFFF) << 8

    def encode(self, bit: int, c0: int, c1: int):
        bound = (self.range // (c0 + c1 + 2)) * (c0 + 1)
        if bit:
            self.low += bound
            self.range -= bound
        else:
            self.range = bound
        while self.range < TOP:
            self.range <<= 8
            self._shift_low()

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        # the first byte only ever holds a carry out of an empty interval: always zero
        assert self.out[0] == 0
        return bytes(self.out[1:])


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 4
        head = bytes(data[:4]).ljust(4, b"\0")
        self.code = int.from_bytes(head, "big")
        self.range = MASK32
        self.overrun = max(0, 4 - len(data))

    def decode(self, c0: int, c1: int) -> int:
        bound = (self.range // (c0 + c1 + 2)) * (c0 + 1)
        if self.code < bound:
            self.range = bound
            bit = 0
        else:
            self.code -= bound
            self.range -= bound
            bit = 1
        while self.range < TOP:
            self.range <<= 8
            if self.pos < len(self.data):
                self.code = ((self.code << 8) | self.data[self.pos]) & MASK32
            else:
                self.code = (self.code << 8) & MASK32
                self.overrun += 1
            self.pos += 1
        return bit
