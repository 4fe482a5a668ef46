"""Re-emit a baseline JPEG from quantized coefficients.

The preserved header segments are reused; the scan is always written as a
single scan without restart markers. If the original Huffman tables cannot
code the rebuilt scan (multi-scan originals, DC differences that changed
because restart markers were dropped) fresh optimal tables replace them.
"""
from __future__ import annotations

import math
import struct

from ..errors import MalformedStream, MissingHeaderBlob
from .huffman import BitWriter, HuffTable, block_symbols, optimal_table
from .image import CoefficientImage
from .parse import DHT, DRI, SOS


def _header_segments(blob: bytes):
    if blob[:2] != b"\xff\xd8":
        raise MalformedStream("header blob does not start with SOI")
    pos = 2
    segs = []
    while pos < len(blob):
        if blob[pos] != 0xFF:
            raise MalformedStream("bad marker in header blob")
        while blob[pos] == 0xFF:
            pos += 1
        marker = blob[pos]
        length = struct.unpack(">H", blob[pos + 1:pos + 3])[0]
        segs.append((marker, blob[pos + 3:pos + 1 + length]))
        pos += 1 + length
    if not segs or segs[-1][0] != SOS:
        raise MalformedStream("header blob does not end with SOS")
    return segs


def _segment(marker: int, payload: bytes) -> bytes:
    return bytes([0xFF, marker]) + struct.pack(">H", len(payload) + 2) + payload


def _scan_order(img: CoefficientImage):
    """(component index, block row, block col) in scan order."""
    comps = img.components
    if len(comps) == 1:
        c = comps[0]
        hmax, vmax = c.h_samp, c.v_samp
        bh = math.ceil(math.ceil(img.height * c.v_samp / vmax) / 8)
        bw = math.ceil(math.ceil(img.width * c.h_samp / hmax) / 8)
        return [(0, r, col) for r in range(bh) for col in range(bw)]
    hmax = max(c.h_samp for c in comps)
    vmax = max(c.v_samp for c in comps)
    mcux = math.ceil(img.width / (8 * hmax))
    mcuy = math.ceil(img.height / (8 * vmax))
    order = []
    for my in range(mcuy):
        for mx in range(mcux):
            for ci, c in enumerate(comps):
                for vv in range(c.v_samp):
                    for hh in range(c.h_samp):
                        order.append((ci, my * c.v_samp + vv, mx * c.h_samp + hh))
    return order


def _symbols(img: CoefficientImage):
    preds = [0] * len(img.components)
    out = []
    for ci, r, c in _scan_order(img):
        block = img.components[ci].blocks[r, c]
        syms = block_symbols(block, preds[ci])
        preds[ci] = int(block[0])
        out.append((ci, syms))
    return out


def _encodable(tables, selectors, symbols) -> bool:
    for ci, syms in symbols:
        dc_code, dc_len = tables[(0, selectors[ci][0])]
        ac_code, ac_len = tables[(1, selectors[ci][1])]
        if dc_len[syms[0][0]] == 0:
            return False
        for sym, _ in syms[1:]:
            if ac_len[sym] == 0:
                return False
    return True


def rebuild_jpeg(img: CoefficientImage) -> bytes:
    if not img.header_blob:
        raise MissingHeaderBlob("image carries no header blob")
    segs = _header_segments(img.header_blob)
    sos = segs[-1][1]
    ns = sos[0]
    scan_sel = {sos[1 + 2 * k]: (sos[2 + 2 * k] >> 4, sos[2 + 2 * k] & 15) for k in range(ns)}

    htables = {}
    for marker, payload in segs:
        if marker == DHT:
            p = 0
            while p < len(payload):
                counts = tuple(payload[p + 1:p + 17])
                total = sum(counts)
                htables[(payload[p] >> 4, payload[p] & 15)] = HuffTable(counts, payload[p + 17:p + 17 + total])
                p += 17 + total

    symbols = _symbols(img)
    ids = [c.component_id for c in img.components]
    selectors = None
    if all(cid in scan_sel for cid in ids):
        selectors = [scan_sel[cid] for cid in ids]
        needed = {(0, s[0]) for s in selectors} | {(1, s[1]) for s in selectors}
        if needed <= set(htables):
            enc = {key: htables[key].encoder() for key in needed}
            if not _encodable(enc, selectors, symbols):
                selectors = None
        else:
            selectors = None

    body = [m_p for m_p in segs[:-1] if m_p[0] != DRI]
    if selectors is None:
        selectors = [(0, 0) if ci == 0 else (1, 1) for ci in range(len(ids))]
        freqs = {key: [0] * 256 for key in [(0, 0), (1, 0), (0, 1), (1, 1)]}
        for ci, syms in symbols:
            td, ta = selectors[ci]
            freqs[(0, td)][syms[0][0]] += 1
            for sym, _ in syms[1:]:
                freqs[(1, ta)][sym] += 1
        new = {key: optimal_table(f) for key, f in freqs.items() if any(f)}
        payload = b"".join(t.segment_payload(key[0], key[1]) for key, t in sorted(new.items()))
        body = [m_p for m_p in body if m_p[0] != DHT] + [(DHT, payload)]
        htables = new
    enc = {key: htables[key].encoder() for key in {(0, s[0]) for s in selectors} | {(1, s[1]) for s in selectors}}

    bw = BitWriter()
    for ci, syms in symbols:
        dc_code, dc_len = enc[(0, selectors[ci][0])]
        ac_code, ac_len = enc[(1, selectors[ci][1])]
        cat, diff = syms[0]
        bw.write(int(dc_code[cat]), int(dc_len[cat]))
        if cat:
            bw.write(diff if diff > 0 else diff + (1 << cat) - 1, cat)
        for sym, v in syms[1:]:
            bw.write(int(ac_code[sym]), int(ac_len[sym]))
            s = sym & 15
            if s:
                bw.write(v if v > 0 else v + (1 << s) - 1, s)

    sos_payload = bytes([len(ids)]) + b"".join(
        bytes([cid, (selectors[ci][0] << 4) | selectors[ci][1]]) for ci, cid in enumerate(ids)
    ) + bytes([0, 63, 0])
    out = [b"\xff\xd8"]
    out += [_segment(m, p) for m, p in body]
    out.append(_segment(SOS, sos_payload))
    out.append(bw.flush())
    out.append(b"\xff\xd9")
    return b"".join(out)
