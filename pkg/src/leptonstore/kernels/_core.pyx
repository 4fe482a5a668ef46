# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the Huffman segment decoder and the coefficient coding loop.

Behaviour (including every error) matches leptonstore.jpeg.huffman.decode_segment
and leptonstore.codec.coder byte for byte.
"""
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset

import numpy as np

from leptonstore.errors import CoefficientRange, CorruptStream, MalformedStream

ctypedef unsigned long long u64
ctypedef unsigned int u32
ctypedef long long i64

cdef int ZZ[64]
_zz = [0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
       12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
       35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
       58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63]
for _i in range(64):
    ZZ[_i] = _zz[_i]


# -- Huffman ------------------------------------------------------------------

def decode_segment(const unsigned char[:] data, const int[:] blk_table, const long long[:] blk_dst,
                   const unsigned char[:, :] dc_len, const unsigned char[:, :] dc_sym,
                   const unsigned char[:, :] ac_len, const unsigned char[:, :] ac_sym,
                   short[:, :] coef, long long[:] dc_pred):
    cdef Py_ssize_t n = data.shape[0]
    cdef i64 total_bits = 8 * n
    cdef u64 acc = 0
    cdef int nacc = 0
    cdef Py_ssize_t pos = 0
    cdef i64 consumed = 0
    cdef Py_ssize_t i, nblk = blk_dst.shape[0]
    cdef int t, k, length, s, r, rs, j
    cdef unsigned int peek, bits
    cdef i64 diff, pred
    cdef short blk[64]

    for i in range(nblk):
        t = blk_table[i]
        memset(blk, 0, sizeof(blk))
        if nacc < 32:
            while nacc < 40:
                acc = (acc << 8) | (data[pos] if pos < n else 0xFF)
                pos += 1
                nacc += 8
        peek = (acc >> (nacc - 16)) & 0xFFFF
        length = dc_len[t, peek]
        if length == 0:
            raise MalformedStream("invalid DC Huffman code")
        s = dc_sym[t, peek]
        nacc -= length
        consumed += length
        if s > 11:
            raise MalformedStream(f"DC category {s}")
        diff = 0
        if s:
            bits = (acc >> (nacc - s)) & ((1 << s) - 1)
            nacc -= s
            consumed += s
            diff = bits if bits >> (s - 1) else <i64>bits - (1 << s) + 1
        pred = dc_pred[t] + diff
        if pred < -32768 or pred > 32767:
            raise MalformedStream("DC value out of range")
        dc_pred[t] = pred
        blk[0] = <short>pred

        k = 1
        while k < 64:
            if nacc < 32:
                while nacc < 40:
                    acc = (acc << 8) | (data[pos] if pos < n else 0xFF)
                    pos += 1
                    nacc += 8
            peek = (acc >> (nacc - 16)) & 0xFFFF
            length = ac_len[t, peek]
            if length == 0:
                raise MalformedStream("invalid AC Huffman code")
            rs = ac_sym[t, peek]
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
            blk[ZZ[k]] = <short>(bits if bits >> (s - 1) else <int>bits - (1 << s) + 1)
            k += 1
        if k > 64:
            raise MalformedStream("AC run past end of block")
        for j in range(64):
            coef[blk_dst[i], j] = blk[j]
        if consumed > total_bits:
            raise MalformedStream("truncated scan")
    return consumed


# -- coefficient coding -------------------------------------------------------

cdef enum:
    EXP_BITS = 11
    MAX_MAGNITUDE = 2047

cdef int ORDER77[49]
cdef int ROW77[49]
cdef int NZ_BUCKET[50]
cdef int NZ77_PREFIX[6]
cdef int NZE_PREFIX[3]


def _install_orders(order77, nz_bucket):
    """Called once from Python with the region order and neighbour buckets."""
    for i in range(49):
        ORDER77[i] = order77[i]
        ROW77[i] = order77[i] // 8 - 1
    for i in range(50):
        NZ_BUCKET[i] = nz_bucket[i]


for _i, _v in enumerate((25, 13, 7, 4, 2, 1)):
    NZ77_PREFIX[_i] = _v
for _i, _v in enumerate((4, 2, 1)):
    NZE_PREFIX[_i] = _v

cdef int M_EXP_7X7, M_EXP_EDGE, M_EXP_DC, M_RES_7X7, M_RES_EDGE, M_RES_DC, M_RES_THRES
cdef int M_NZ_7X7, M_NZ_EDGEX, M_NZ_EDGEY, M_SIGN


def _install_models(ids):
    global M_EXP_7X7, M_EXP_EDGE, M_EXP_DC, M_RES_7X7, M_RES_EDGE, M_RES_DC, M_RES_THRES
    global M_NZ_7X7, M_NZ_EDGEX, M_NZ_EDGEY, M_SIGN
    (M_EXP_7X7, M_EXP_EDGE, M_EXP_DC, M_RES_7X7, M_RES_EDGE, M_RES_DC, M_RES_THRES,
     M_NZ_7X7, M_NZ_EDGEX, M_NZ_EDGEY, M_SIGN) = ids


cdef inline int bitlen(i64 v) nogil:
    cdef int n = 0
    while v:
        v >>= 1
        n += 1
    return n


cdef inline int imin(int a, int b) nogil:
    return a if a < b else b


cdef inline int iabs(int a) nogil:
    return -a if a < 0 else a


cdef i64 EDGE_W[8]
for _i, _v in enumerate((5793, 8035, 7568, 6811, 5793, 4551, 3135, 1598)):
    EDGE_W[_i] = _v


cdef inline i64 edge_prediction(short* cur, short* ref, int axis, int u, const long long* q) nogil:
    cdef i64 num = 0, t, den, p
    cdef int v, k
    if ref == NULL:
        return 0
    for v in range(8):
        k = v * 8 + u if axis == 0 else u * 8 + v
        t = <i64>ref[k] * q[k] * EDGE_W[v]
        num += -t if v & 1 else t
        if v:
            num -= <i64>cur[k] * q[k] * EDGE_W[v]
    k = u if axis == 0 else u * 8
    den = q[k] * EDGE_W[0]
    p = ((-num if num < 0 else num) + den // 2) // den
    return -p if num < 0 else p


cdef inline int signed_bucket(i64 p) nogil:
    if p == 0:
        return 0
    return imin(bitlen(-p if p < 0 else p), 5) + (5 if p < 0 else 0)


cdef class _Coder:
    cdef object store
    cdef const unsigned char[:] kind_mv
    cdef const long long[:] slot_base, ways, set_base, bnd_off, bnd_cnt, bnd, index_offset
    cdef int[:] fill, tags
    cdef unsigned char[:] c0, c1, touched
    cdef i64 scratch
    cdef bint track
    cdef bint decoding
    # encoder
    cdef u64 low
    cdef u32 rng
    cdef unsigned int cache
    cdef u64 cache_size
    cdef unsigned char* out
    cdef Py_ssize_t out_len, out_cap
    # decoder
    cdef const unsigned char[:] data
    cdef Py_ssize_t pos, data_len
    cdef u32 code_reg
    cdef i64 overrun

    def __cinit__(self):
        self.out = NULL

    def __dealloc__(self):
        if self.out != NULL:
            free(self.out)

    cdef void attach(self, store, bint decoding):
        self.store = store
        self.kind_mv = store.kind
        self.slot_base = store.slot_base
        self.ways = store.ways
        self.set_base = store.set_base
        self.bnd_off = store.bnd_off
        self.bnd_cnt = store.bnd_cnt
        self.bnd = store.bnd
        self.index_offset = store.index_offset
        self.fill = store.fill
        self.tags = store.tags
        self.c0 = store.c0
        self.c1 = store.c1
        self.touched = store.touched
        self.scratch = store.scratch
        self.track = store.track_access
        self.decoding = decoding

    cdef i64 lookup(self, int m, i64 idx) except -2:
        cdef i64 lo, a, b, mid, s, tag, n, first, fs, used, slot
        if self.track:
            self.touched[self.index_offset[m] + idx] = 1
        if self.kind_mv[m] == 0:
            return self.slot_base[m] + idx
        lo = self.bnd_off[m]
        a = 0
        b = self.bnd_cnt[m]
        while a < b:
            mid = (a + b) >> 1
            if idx < self.bnd[lo + mid]:
                b = mid
            else:
                a = mid + 1
        s = a
        tag = idx - (self.bnd[lo + s - 1] if s else 0)
        n = self.ways[m]
        first = self.slot_base[m] + s * n
        fs = self.set_base[m] + s
        used = self.fill[fs]
        for slot in range(first, first + used):
            if self.tags[slot] == tag:
                return slot
        if used < n:
            slot = first + used
            self.tags[slot] = <int>tag
            self.fill[fs] = <int>(used + 1)
            return slot
        self.store.record_overflow(m, idx, s)
        return -1

    # -- range coder ----------------------------------------------------------

    cdef int put(self, unsigned int byte) except -1:
        cdef unsigned char* grown
        if self.out_len == self.out_cap:
            self.out_cap = self.out_cap * 2 if self.out_cap else 65536
            grown = <unsigned char*>realloc(self.out, self.out_cap)
            if grown == NULL:
                raise MemoryError()
            self.out = grown
        self.out[self.out_len] = <unsigned char>byte
        self.out_len += 1
        return 0

    cdef int shift_low(self) except -1:
        cdef unsigned int carry, temp
        if self.low < 0xFF000000 or self.low > 0xFFFFFFFF:
            carry = <unsigned int>(self.low >> 32)
            temp = self.cache
            while True:
                self.put((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = <unsigned int>((self.low >> 24) & 0xFF)
        self.cache_size += 1
        self.low = (self.low & 0x00FFFFFF) << 8
        return 0

    cdef int code(self, int model, i64 idx, int bit) except -1:
        cdef i64 slot = self.lookup(model, idx)
        cdef unsigned int a, b
        cdef u32 bound
        if slot == -1:
            if self.decoding:
                raise CorruptStream("set overflow while decoding a bounded stream")
            slot = self.scratch
            self.c0[slot] = 0
            self.c1[slot] = 0
        a = self.c0[slot]
        b = self.c1[slot]
        bound = (self.rng // (a + b + 2)) * (a + 1)
        if self.decoding:
            if self.code_reg < bound:
                self.rng = bound
                bit = 0
            else:
                self.code_reg -= bound
                self.rng -= bound
                bit = 1
            while self.rng < (1 << 24):
                self.rng <<= 8
                if self.pos < self.data_len:
                    self.code_reg = (self.code_reg << 8) | self.data[self.pos]
                else:
                    self.code_reg = self.code_reg << 8
                    self.overrun += 1
                self.pos += 1
        else:
            if bit:
                self.low += bound
                self.rng -= bound
            else:
                self.rng = bound
            while self.rng < (1 << 24):
                self.rng <<= 8
                self.shift_low()
        if bit:
            if b == 255:
                a >>= 1
                b >>= 1
            self.c0[slot] = a
            self.c1[slot] = b + 1
        else:
            if a == 255:
                a >>= 1
                b >>= 1
            self.c0[slot] = a + 1
            self.c1[slot] = b
        return bit

    cdef int exponent(self, int base, i64 idx, int e) except -1:
        cdef int n = 0
        while n < EXP_BITS:
            if not self.code(base + n, idx, 1 if n < e else 0):
                break
            n += 1
        return n

    cdef int block(self, short* blk, short* left, short* above, int flag, const long long* q,
                   int* nzl, int* nza, int* counts) except -1:
        cdef int nz77 = 0, nze, nb, k, bit, value, rem, i, pos, pr, v, a, e, neg, mag, j
        cdef int axis, fa, nbits, hist, step, first_pos
        cdef i64 ctx, idx, rbase, base, lbase
        cdef bint dec = self.decoding
        cdef int spread, ntot, r, pred
        cdef i64 epred

        if not dec:
            for i in range(49):
                if blk[ORDER77[i]]:
                    nz77 += 1
        if nzl != NULL and nza != NULL:
            nb = (nzl[0] + nza[0] + 1) >> 1
        elif nzl != NULL:
            nb = nzl[0]
        elif nza != NULL:
            nb = nza[0]
        else:
            nb = 0
        nb = NZ_BUCKET[nb]
        ctx = flag * 10 + nb
        value = 0
        for k in range(5, -1, -1):
            bit = self.code(M_NZ_7X7 + k, ctx * NZ77_PREFIX[k] + value, (nz77 >> k) & 1)
            value = (value << 1) | bit
        if dec:
            if value > 49:
                raise CorruptStream(f"7x7 nonzero count {value} > 49")
            nz77 = value

        rem = nz77
        i = 0
        while rem and i < 49:
            pos = ORDER77[i]
            pr = imin(bitlen(((iabs(left[pos]) if left != NULL else 0)
                              + (iabs(above[pos]) if above != NULL else 0) + 1) >> 1), 10)
            v = 0 if dec else blk[pos]
            a = iabs(v)
            idx = ((flag * 11 + pr) * 10 + imin(rem, 9)) * 49 + i
            e = self.exponent(M_EXP_7X7, idx, bitlen(a))
            if e:
                neg = self.code(M_SIGN, (flag * 3) * 11 + pr, 1 if v < 0 else 0)
                mag = 1
                rbase = ((flag * 10 + imin(e - 2, 9)) * 9 + imin(pr, 8)) * 7 + ROW77[i]
                for j in range(e - 2, -1, -1):
                    mag = (mag << 1) | self.code(M_RES_7X7 + j, rbase, (a >> j) & 1)
                if dec:
                    blk[pos] = -mag if neg else mag
                rem -= 1
            i += 1
        if rem:
            raise CorruptStream("7x7 region ended before its nonzero count was reached")

        counts[0] = nz77
        for axis in range(2):
            step = 1 if axis == 0 else 8
            first_pos = step
            nze = 0
            if not dec:
                for i in range(7):
                    if blk[first_pos + i * step]:
                        nze += 1
            if nzl != NULL and nza != NULL:
                nb = (nzl[1 + axis] + nza[1 + axis] + 1) >> 1
            elif nzl != NULL:
                nb = nzl[1 + axis]
            elif nza != NULL:
                nb = nza[1 + axis]
            else:
                nb = 0
            ctx = (flag * 8 + imin(nz77 // 7, 7)) * 8 + nb
            value = 0
            for k in range(2, -1, -1):
                bit = self.code((M_NZ_EDGEX if axis == 0 else M_NZ_EDGEY) + k,
                                ctx * NZE_PREFIX[k] + value, (nze >> k) & 1)
                value = (value << 1) | bit
            nze = value
            counts[1 + axis] = nze
            rem = nze
            i = 0
            fa = flag * 2 + axis
            while rem and i < 7:
                pos = first_pos + i * step
                epred = edge_prediction(blk, above if axis == 0 else left, axis, i + 1, q)
                pr = imin(bitlen(-epred if epred < 0 else epred), 10)
                v = 0 if dec else blk[pos]
                a = iabs(v)
                idx = ((fa * 11 + pr) * 7 + imin(rem, 6)) * 7 + i
                e = self.exponent(M_EXP_EDGE, idx, bitlen(a))
                if e:
                    neg = self.code(M_SIGN, (flag * 3 + 1) * 11 + signed_bucket(epred), 1 if v < 0 else 0)
                    mag = 1
                    nbits = e - 1
                    if nbits > 3:
                        base = ((fa * 16 + e) * 8 + i) * 8 + imin(pr, 7)
                        hist = 0
                        for k in range(nbits - 3):
                            j = nbits - 1 - k
                            if k < 7:
                                bit = self.code(M_RES_THRES + k, (base << k) + hist, (a >> j) & 1)
                                hist = (hist << 1) | bit
                            else:
                                bit = self.code(M_RES_THRES + 7, base, (a >> j) & 1)
                            mag = (mag << 1) | bit
                    lbase = (fa * 7 + imin(e - 2, 6)) * 7 + imin(pr, 6)
                    for j in range(imin(nbits, 3) - 1, -1, -1):
                        mag = (mag << 1) | self.code(M_RES_EDGE + j, lbase, (a >> j) & 1)
                    if dec:
                        blk[pos] = -mag if neg else mag
                    rem -= 1
                i += 1
            if rem:
                raise CorruptStream("edge region ended before its nonzero count was reached")

        if left != NULL and above != NULL:
            pred = (left[0] + above[0] + 1) >> 1
            spread = imin(bitlen(iabs(left[0] - above[0])), 16)
        elif left != NULL:
            pred = left[0]
            spread = 0
        elif above != NULL:
            pred = above[0]
            spread = 0
        else:
            pred = 0
            spread = 0
        r = 0 if dec else blk[0] - pred
        a = iabs(r)
        if a > MAX_MAGNITUDE:
            raise CoefficientRange(f"DC residual {r} exceeds {MAX_MAGNITUDE}")
        ntot = imin(bitlen(counts[0] + counts[1] + counts[2]), 5)
        e = self.exponent(M_EXP_DC, (flag * 17 + spread) * 6 + ntot, bitlen(a))
        if e:
            neg = self.code(M_SIGN, (flag * 3 + 2) * 11 + imin(spread, 10), 1 if r < 0 else 0)
            mag = 1
            rbase = flag * 6 + imin(spread, 5)
            for j in range(e - 2, -1, -1):
                mag = (mag << 1) | self.code(M_RES_DC + j, rbase, (a >> j) & 1)
            if dec:
                blk[0] = pred + (-mag if neg else mag)
        elif dec:
            blk[0] = pred
        return 0

    cdef int traverse(self, list components, list quants) except -1:
        cdef short[:, :, ::1] blocks
        cdef const long long[::1] q
        cdef int[:, :, ::1] nz
        cdef Py_ssize_t ci, by, bx, hb, wb
        cdef short* left
        cdef short* above
        cdef int* nzl
        cdef int* nza
        cdef int flag
        for ci in range(len(components)):
            blocks = components[ci]
            q = quants[ci]
            flag = 0 if ci == 0 else 1
            hb = blocks.shape[0]
            wb = blocks.shape[1]
            if hb == 0 or wb == 0:
                continue
            nz = np.zeros((hb, wb, 3), dtype=np.intc)
            for by in range(hb):
                for bx in range(wb):
                    left = &blocks[by, bx - 1, 0] if bx else NULL
                    above = &blocks[by - 1, bx, 0] if by else NULL
                    nzl = &nz[by, bx - 1, 0] if bx else NULL
                    nza = &nz[by - 1, bx, 0] if by else NULL
                    self.block(&blocks[by, bx, 0], left, above, flag, &q[0], nzl, nza, &nz[by, bx, 0])
        return 0


def _quant_arrays(quants):
    out = [np.ascontiguousarray(q, dtype=np.int64).reshape(64) for q in quants]
    for q in out:
        if (q < 1).any():
            raise ValueError("quant values must be positive")
    return out


def encode_blocks(components, quants, store):
    cdef _Coder c = _Coder()
    cdef int i
    comps = [np.ascontiguousarray(b, dtype=np.int16) for b in components]
    qs = _quant_arrays(quants)
    for b in comps:
        if b.size and int(np.abs(b[..., 1:].astype(np.int32)).max(initial=0)) > MAX_MAGNITUDE:
            raise CoefficientRange(f"AC coefficient magnitude exceeds {MAX_MAGNITUDE}")
    c.attach(store, False)
    c.low = 0
    c.rng = 0xFFFFFFFF
    c.cache = 0
    c.cache_size = 1
    c.traverse(comps, qs)
    for i in range(5):
        c.shift_low()
    if c.out_len < 1 or c.out[0] != 0:
        raise AssertionError("range coder produced a nonzero lead byte")
    return bytes(c.out[1:c.out_len])


def decode_blocks(payload, shapes, quants, store):
    cdef _Coder c = _Coder()
    cdef int i
    cdef bytes data = bytes(payload)
    c.attach(store, True)
    c.data = data
    c.data_len = len(data)
    c.rng = 0xFFFFFFFF
    c.code_reg = 0
    c.overrun = 0
    for i in range(4):
        c.code_reg <<= 8
        if i < c.data_len:
            c.code_reg |= data[i]
        else:
            c.overrun += 1
    c.pos = 4
    out = [np.zeros((hb, wb, 64), dtype=np.int16) for hb, wb in shapes]
    c.traverse(out, _quant_arrays(quants))
    if c.overrun:
        raise CorruptStream(f"payload exhausted ({c.overrun} bytes past the end)")
    return out
