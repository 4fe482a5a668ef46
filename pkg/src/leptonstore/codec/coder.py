"""Coefficient coding loop (pure Python reference of the compiled kernel).

Blocks are visited component by component in raster order. Per block the
syntax elements follow this order:

    1. number of nonzeros in the 7x7 region   (6 bits, nz_7x7_k)
    2. 7x7 coefficients, coding order, up to the last nonzero
    3. number of nonzeros in the x edge       (3 bits, nz_edgex_k)
    4. x edge coefficients
    5. number of nonzeros in the y edge       (3 bits, nz_edgey_k)
    6. y edge coefficients
    7. DC prediction residual

Contexts of 7x7 coefficients use the co-located coefficients of the left
and above blocks; edge coefficients use a border-continuity prediction
from the neighbour across that edge (see ``context.edge_prediction``).

A coefficient is coded as a unary exponent (one model per bit position),
a sign bit and the bits below its leading one. Encoder and decoder share
the traversal below; ``code(model, index, bit)`` either writes ``bit`` or
ignores it and returns the decoded bit.
"""
from __future__ import annotations

import numpy as np

from ..errors import CoefficientRange, CorruptStream
from ..store.bins import COUNTER_MAX
from .context import dc_spread, edge_prediction, mean_available, predict_dc, signed_bucket
from .rangecoder import RangeDecoder, RangeEncoder
from .regions import ORDER_7X7
from .registry import (EXP_7X7, EXP_DC, EXP_EDGE, NZ_7X7, NZ_EDGEX, NZ_EDGEY, RES_7X7, RES_DC, RES_EDGE,
                       RES_THRES, SIGN)

MAX_MAGNITUDE = 2047
EXP_BITS = 11

# neighbour 7x7 nonzero count (0..49) -> context bucket; finer where counts are common
NZ_NEIGHBOUR_BUCKET = tuple([0, 1, 2, 3, 4, 4, 5, 5] + [6] * 4 + [7] * 6 + [8] * 10 + [9] * 22)

SYNTAX_ORDER = ("nz_7x7", "coef_7x7", "nz_edgex", "coef_edgex", "nz_edgey", "coef_edgey", "dc")

_ORDER_7X7 = [int(p) for p in ORDER_7X7]
_ROW_7X7 = [p // 8 - 1 for p in _ORDER_7X7]
_EDGE_POS = ([1 + i for i in range(7)], [8 * (i + 1) for i in range(7)])


def _bitlen_bucket(a: int, b: int, cap: int) -> int:
    return min(((abs(a) + abs(b) + 1) >> 1).bit_length(), cap)


def _exponent(code, model_base, idx, e):
    n = 0
    while n < EXP_BITS:
        if not code(model_base + n, idx, 1 if n < e else 0):
            break
        n += 1
    return n


def _code_block(code, blk, left, above, flag, quant, nzl, nza, decoding, syntax=None):
    """Code one block. ``blk`` is a list of 64 ints (filled in when decoding).

    ``quant`` is the component's raster quant table (edge predictions).
    ``nzl`` / ``nza`` are the (nz77, nzx, nzy) counts of the neighbours or None.
    Returns this block's counts.
    """
    # -- 1. nonzero count of the 7x7 region
    if decoding:
        nz77 = 0
    else:
        nz77 = sum(1 for p in _ORDER_7X7 if blk[p])
    nb = NZ_NEIGHBOUR_BUCKET[mean_available(nzl[0] if nzl else None, nza[0] if nza else None)]
    ctx = (flag * 10 + nb)
    value = 0
    for k in range(5, -1, -1):
        prefix = value
        bit = code(NZ_7X7 + k, ctx * (25, 13, 7, 4, 2, 1)[k] + prefix, (nz77 >> k) & 1)
        value = (value << 1) | bit
    if decoding:
        if value > 49:
            raise CorruptStream(f"7x7 nonzero count {value} > 49")
        nz77 = value
    if syntax is not None:
        syntax.append("nz_7x7")
        syntax.append("coef_7x7")

    # -- 2. 7x7 coefficients
    rem = nz77
    i = 0
    while rem and i < 49:
        pos = _ORDER_7X7[i]
        pr = _bitlen_bucket(left[pos] if left else 0, above[pos] if above else 0, 10)
        v = 0 if decoding else blk[pos]
        idx = ((flag * 11 + pr) * 10 + min(rem, 9)) * 49 + i
        e = _exponent(code, EXP_7X7, idx, abs(v).bit_length())
        if e:
            neg = code(SIGN, (flag * 3) * 11 + pr, 1 if v < 0 else 0)
            mag = 1
            rbase = ((flag * 10 + min(e - 2, 9)) * 9 + min(pr, 8)) * 7 + _ROW_7X7[i]
            for j in range(e - 2, -1, -1):
                mag = (mag << 1) | code(RES_7X7 + j, rbase, (abs(v) >> j) & 1)
            if decoding:
                blk[pos] = -mag if neg else mag
            rem -= 1
        i += 1
    if rem:
        raise CorruptStream("7x7 region ended before its nonzero count was reached")

    # -- 3..6. edges
    counts = [nz77, 0, 0]
    for axis in (0, 1):
        positions = _EDGE_POS[axis]
        if decoding:
            nze = 0
        else:
            nze = sum(1 for p in positions if blk[p])
        nbe = mean_available(nzl[1 + axis] if nzl else None, nza[1 + axis] if nza else None)
        ctx = (flag * 8 + min(nz77 // 7, 7)) * 8 + nbe
        nz_model = NZ_EDGEX if axis == 0 else NZ_EDGEY
        value = 0
        for k in range(2, -1, -1):
            bit = code(nz_model + k, ctx * (4, 2, 1)[k] + value, (nze >> k) & 1)
            value = (value << 1) | bit
        nze = value
        counts[1 + axis] = nze
        if syntax is not None:
            syntax.append("nz_edgex" if axis == 0 else "nz_edgey")
            syntax.append("coef_edgex" if axis == 0 else "coef_edgey")
        rem = nze
        i = 0
        fa = flag * 2 + axis
        while rem and i < 7:
            pos = positions[i]
            pred = edge_prediction(blk, above if axis == 0 else left, axis, i + 1, quant)
            pr = min(abs(pred).bit_length(), 10)
            v = 0 if decoding else blk[pos]
            a = abs(v)
            idx = ((fa * 11 + pr) * 7 + min(rem, 6)) * 7 + i
            e = _exponent(code, EXP_EDGE, idx, a.bit_length())
            if e:
                neg = code(SIGN, (flag * 3 + 1) * 11 + signed_bucket(pred), 1 if v < 0 else 0)
                mag = 1
                nbits = e - 1
                if nbits > 3:
                    # high residual bits: context extended by the bits already coded
                    base = ((fa * 16 + e) * 8 + i) * 8 + min(pr, 7)
                    hist = 0
                    for k in range(nbits - 3):
                        j = nbits - 1 - k
                        if k < 7:
                            bit = code(RES_THRES + k, (base << k) + hist, (a >> j) & 1)
                            hist = (hist << 1) | bit
                        else:
                            bit = code(RES_THRES + 7, base, (a >> j) & 1)
                        mag = (mag << 1) | bit
                lbase = (fa * 7 + min(e - 2, 6)) * 7 + min(pr, 6)
                for j in range(min(nbits, 3) - 1, -1, -1):
                    mag = (mag << 1) | code(RES_EDGE + j, lbase, (a >> j) & 1)
                if decoding:
                    blk[pos] = -mag if neg else mag
                rem -= 1
            i += 1
        if rem:
            raise CorruptStream("edge region ended before its nonzero count was reached")

    # -- 7. DC residual
    if syntax is not None:
        syntax.append("dc")
    pred = predict_dc(left, above)
    spread = dc_spread(left, above)
    r = 0 if decoding else blk[0] - pred
    a = abs(r)
    if a > MAX_MAGNITUDE:
        raise CoefficientRange(f"DC residual {r} exceeds {MAX_MAGNITUDE}")
    ntot = min((counts[0] + counts[1] + counts[2]).bit_length(), 5)
    e = _exponent(code, EXP_DC, (flag * 17 + spread) * 6 + ntot, a.bit_length())
    if e:
        neg = code(SIGN, (flag * 3 + 2) * 11 + min(spread, 10), 1 if r < 0 else 0)
        mag = 1
        rbase = flag * 6 + min(spread, 5)
        for j in range(e - 2, -1, -1):
            mag = (mag << 1) | code(RES_DC + j, rbase, (a >> j) & 1)
        if decoding:
            blk[0] = pred + (-mag if neg else mag)
    elif decoding:
        blk[0] = pred
    return counts


def _check_range(blocks):
    if blocks.size and int(np.abs(blocks[..., 1:].astype(np.int32)).max(initial=0)) > MAX_MAGNITUDE:
        raise CoefficientRange(f"AC coefficient magnitude exceeds {MAX_MAGNITUDE}")


def _quant_lists(quants):
    out = [[int(x) for x in np.asarray(q).reshape(64)] for q in quants]
    if any(x < 1 for q in out for x in q):
        raise ValueError("quant values must be positive")
    return out


def _traverse(code, components, quants, decoding, syntax=None):
    """Run the coding loop over every block of every component."""
    quants = _quant_lists(quants)
    for ci, blocks in enumerate(components):
        flag = 0 if ci == 0 else 1
        quant = quants[ci]
        hb, wb = blocks.shape[:2]
        rows_prev = None
        nz_prev = None
        for by in range(hb):
            row = [None] * wb
            nz_row = [None] * wb
            src = None if decoding else blocks[by].tolist()
            for bx in range(wb):
                blk = [0] * 64 if decoding else src[bx]
                left = row[bx - 1] if bx else None
                above = rows_prev[bx] if rows_prev is not None else None
                nzl = nz_row[bx - 1] if bx else None
                nza = nz_prev[bx] if nz_prev is not None else None
                nz_row[bx] = _code_block(code, blk, left, above, flag, quant, nzl, nza, decoding, syntax)
                row[bx] = blk
            if decoding:
                blocks[by] = np.asarray(row, dtype=np.int16)
            rows_prev = row
            nz_prev = nz_row


def encode_blocks(components, quants, store, trace=None, syntax=None) -> bytes:
    """Arithmetic-code the block grids of all components.

    ``quants`` holds each component's 64-entry raster quant table.
    Overflowing lookups are logged in ``store`` and coded with a scratch
    bin so the whole image is still traversed. ``trace`` (a list) receives
    every (model, index) access, ``syntax`` the syntax-element tags.
    """
    enc = RangeEncoder()
    c0 = store.c0
    c1 = store.c1
    lookup = store.slot_or_scratch
    encode = enc.encode

    def code(model, idx, bit):
        if trace is not None:
            trace.append((model, idx))
        slot = lookup(model, idx)
        a = c0[slot]
        b = c1[slot]
        encode(bit, a, b)
        if bit:
            if b == COUNTER_MAX:
                a >>= 1
                b >>= 1
            c0[slot] = a
            c1[slot] = b + 1
        else:
            if a == COUNTER_MAX:
                a >>= 1
                b >>= 1
            c0[slot] = a + 1
            c1[slot] = b
        return bit

    for blocks in components:
        _check_range(np.asarray(blocks))
    _traverse(code, [np.asarray(b) for b in components], quants, False, syntax)
    return enc.finish()


def decode_blocks(payload: bytes, shapes, quants, store, trace=None, syntax=None) -> list:
    """Inverse of :func:`encode_blocks`; ``shapes`` are (height_blocks, width_blocks)."""
    dec = RangeDecoder(payload)
    c0 = store.c0
    c1 = store.c1
    lookup = store.lookup
    decode = dec.decode

    def code(model, idx, _bit):
        if trace is not None:
            trace.append((model, idx))
        slot = lookup(model, idx)
        if slot is None:
            raise CorruptStream("set overflow while decoding a bounded stream")
        a = c0[slot]
        b = c1[slot]
        bit = decode(a, b)
        if bit:
            if b == COUNTER_MAX:
                a >>= 1
                b >>= 1
            c0[slot] = a
            c1[slot] = b + 1
        else:
            if a == COUNTER_MAX:
                a >>= 1
                b >>= 1
            c0[slot] = a + 1
            c1[slot] = b
        return bit

    out = [np.zeros((hb, wb, 64), dtype=np.int16) for hb, wb in shapes]
    _traverse(code, out, quants, True, syntax)
    if dec.overrun:
        raise CorruptStream(f"payload exhausted ({dec.overrun} bytes past the end)")
    return out
