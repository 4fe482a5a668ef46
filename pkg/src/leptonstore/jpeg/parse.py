"""Baseline sequential JPEG -> quantized coefficient blocks."""
from __future__ import annotations

import math
import struct

import numpy as np

from .. import kernels
from ..errors import MalformedStream, UnsupportedFrame
from .huffman import HuffTable
from .image import CoefficientImage, Component, QuantTable

SOI, EOI, SOS, DHT, DQT, DRI, DNL = 0xD8, 0xD9, 0xDA, 0xC4, 0xDB, 0xDD, 0xDC
SOF0 = 0xC0
# every other SOFn (and DAC) means a coding process we do not handle
UNSUPPORTED_SOF = {0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCC, 0xCD, 0xCE, 0xCF}
RST0, RST7 = 0xD0, 0xD7


class _Frame:
    def __init__(self, payload: bytes):
        if len(payload) < 6:
            raise MalformedStream("short SOF segment")
        precision, self.height, self.width, ncomp = struct.unpack(">BHHB", payload[:6])
        if precision != 8:
            raise UnsupportedFrame(f"{precision}-bit sample precision")
        if self.height == 0:
            raise UnsupportedFrame("frame height defined by DNL")
        if self.width == 0:
            raise MalformedStream("zero frame width")
        if ncomp not in (1, 3):
            raise UnsupportedFrame(f"{ncomp} components")
        if len(payload) < 6 + 3 * ncomp:
            raise MalformedStream("short SOF segment")
        self.comps = []
        for i in range(ncomp):
            cid, hv, tq = payload[6 + 3 * i: 9 + 3 * i]
            h, v = hv >> 4, hv & 15
            if not (1 <= h <= 4 and 1 <= v <= 4):
                raise MalformedStream(f"sampling factors {h}x{v}")
            self.comps.append((cid, h, v, tq))
        if len({c[0] for c in self.comps}) != ncomp:
            raise MalformedStream("duplicate component ids")
        self.hmax = max(c[1] for c in self.comps)
        self.vmax = max(c[2] for c in self.comps)
        self.mcux = math.ceil(self.width / (8 * self.hmax))
        self.mcuy = math.ceil(self.height / (8 * self.vmax))
        # MCU-padded grid per component
        self.grid = [(self.mcuy * v, self.mcux * h) for _, h, v, _ in self.comps]
        self.offsets = np.cumsum([0] + [gh * gw for gh, gw in self.grid])

    def coded_dims(self, ci: int):
        """Block dims covered by a single-component (non-interleaved) scan."""
        _, h, v, _ = self.comps[ci]
        cw = math.ceil(self.width * h / self.hmax)
        ch = math.ceil(self.height * v / self.vmax)
        return math.ceil(ch / 8), math.ceil(cw / 8)


def _segments(data: bytes, start: int):
    """Split entropy-coded data at RST markers.

    Returns (list of unstuffed segments, offset of the terminating marker).
    """
    segs = []
    seg_start = start
    i = start
    n = len(data)
    while True:
        i = data.find(b"\xff", i)
        if i < 0 or i + 1 >= n:
            # ran off the end: treat what we have as the final segment
            segs.append(data[seg_start:n].replace(b"\xff\x00", b"\xff"))
            return segs, n
        j = i + 1
        while j < n and data[j] == 0xFF:
            j += 1
        if j >= n:
            segs.append(data[seg_start:i].replace(b"\xff\x00", b"\xff"))
            return segs, n
        m = data[j]
        if m == 0x00:
            i = j + 1
            continue
        segs.append(data[seg_start:i].replace(b"\xff\x00", b"\xff"))
        if RST0 <= m <= RST7:
            seg_start = i = j + 1
            continue
        return segs, i


def _parse_dht(payload: bytes, tables: dict):
    p = 0
    while p < len(payload):
        if p + 17 > len(payload):
            raise MalformedStream("short DHT segment")
        tc, th = payload[p] >> 4, payload[p] & 15
        if tc > 1 or th > 3:
            raise MalformedStream(f"bad DHT class/id {tc}/{th}")
        counts = tuple(payload[p + 1: p + 17])
        total = sum(counts)
        syms = payload[p + 17: p + 17 + total]
        if len(syms) != total:
            raise MalformedStream("short DHT segment")
        tables[(tc, th)] = HuffTable(counts, bytes(syms))
        p += 17 + total


def _parse_dqt(payload: bytes, qtables: dict):
    p = 0
    while p < len(payload):
        pq, tq = payload[p] >> 4, payload[p] & 15
        if pq > 1 or tq > 3:
            raise MalformedStream(f"bad DQT precision/id {pq}/{tq}")
        size = 128 if pq else 64
        raw = payload[p + 1: p + 1 + size]
        if len(raw) != size:
            raise MalformedStream("short DQT segment")
        vals = np.frombuffer(raw, dtype=">u2" if pq else np.uint8).astype(np.uint16)
        if np.any(vals == 0):
            raise MalformedStream(f"quant table {tq} has a zero entry")
        qtables[tq] = QuantTable(tq, vals)
        p += 1 + size


def _decode_scan(data, pos, header, frame, htables, restart_interval, coef):
    ns = header[0]
    if len(header) != 4 + 2 * ns or not 1 <= ns <= 4:
        raise MalformedStream("bad SOS header")
    ss, se, ahal = header[1 + 2 * ns], header[2 + 2 * ns], header[3 + 2 * ns]
    if ss != 0 or se != 63 or ahal != 0:
        raise UnsupportedFrame("spectral selection / successive approximation in a baseline frame")
    ids = [c[0] for c in frame.comps]
    scomps = []
    for k in range(ns):
        cid, tdta = header[1 + 2 * k], header[2 + 2 * k]
        if cid not in ids:
            raise MalformedStream(f"scan references unknown component {cid}")
        td, ta = tdta >> 4, tdta & 15
        if (0, td) not in htables or (1, ta) not in htables:
            raise MalformedStream("scan references undefined Huffman table")
        scomps.append((ids.index(cid), td, ta))

    dc_len = np.zeros((ns, 65536), np.uint8)
    dc_sym = np.zeros((ns, 65536), np.uint8)
    ac_len = np.zeros((ns, 65536), np.uint8)
    ac_sym = np.zeros((ns, 65536), np.uint8)
    for k, (_, td, ta) in enumerate(scomps):
        dc_len[k], dc_sym[k] = htables[(0, td)].lookup()
        ac_len[k], ac_sym[k] = htables[(1, ta)].lookup()

    # block visiting order of one full scan
    if ns == 1:
        ci = scomps[0][0]
        bh, bw = frame.coded_dims(ci)
        gw = frame.grid[ci][1]
        rr, cc = np.mgrid[0:bh, 0:bw]
        dst = (frame.offsets[ci] + rr * gw + cc).ravel()
        tab = np.zeros(dst.size, np.int32)
        per_mcu = 1
        n_mcu = bh * bw
    else:
        dsts, tabs = [], []
        for k, (ci, _, _) in enumerate(scomps):
            _, h, v, _ = frame.comps[ci]
            gw = frame.grid[ci][1]
            for vv in range(v):
                for hh in range(h):
                    my, mx = np.mgrid[0:frame.mcuy, 0:frame.mcux]
                    dsts.append((frame.offsets[ci] + (my * v + vv) * gw + mx * h + hh).ravel())
                    tabs.append(k)
        per_mcu = len(dsts)
        dst = np.stack(dsts, axis=1).ravel()  # MCU-major
        tab = np.tile(np.array(tabs, np.int32), frame.mcuy * frame.mcux)
        n_mcu = frame.mcuy * frame.mcux
    dst = dst.astype(np.int64)

    segs, end = _segments(data, pos)
    interval = restart_interval if restart_interval else n_mcu
    n_segs = math.ceil(n_mcu / interval)
    if len(segs) < n_segs:
        raise MalformedStream(f"truncated scan: {len(segs)} of {n_segs} restart segments")
    for s in range(n_segs):
        lo = s * interval * per_mcu
        hi = min((s + 1) * interval, n_mcu) * per_mcu
        dc_pred = np.zeros(ns, np.int64)
        kernels.decode_segment(segs[s], tab[lo:hi], dst[lo:hi], dc_len, dc_sym, ac_len, ac_sym,
                               coef, dc_pred)
    return end


def parse_jpeg(data: bytes) -> CoefficientImage:
    """Decode a baseline JPEG down to its quantized DCT coefficients."""
    data = bytes(data)
    if data[:2] != b"\xff\xd8":
        raise MalformedStream("missing SOI marker")
    pos = 2
    n = len(data)
    frame = None
    coef = None
    htables: dict = {}
    qtables: dict = {}
    restart = 0
    header_blob = None
    scans = 0
    while True:
        if pos >= n:
            if scans:
                break  # tolerate a missing EOI after complete scans
            raise MalformedStream("unexpected end of data before any scan")
        if data[pos] != 0xFF:
            raise MalformedStream(f"expected marker at offset {pos}")
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            raise MalformedStream("dangling fill bytes")
        marker = data[pos]
        pos += 1
        if marker == EOI:
            break
        if marker == SOI or RST0 <= marker <= RST7 or marker == 0x01:
            raise MalformedStream(f"unexpected marker 0x{marker:02X}")
        if pos + 2 > n:
            raise MalformedStream("truncated segment length")
        length = struct.unpack(">H", data[pos:pos + 2])[0]
        if length < 2 or pos + length > n:
            raise MalformedStream(f"bad segment length for marker 0x{marker:02X}")
        payload = data[pos + 2: pos + length]
        seg_end = pos + length

        if marker == SOF0:
            if frame is not None:
                raise MalformedStream("multiple frames")
            frame = _Frame(payload)
            coef = np.zeros((int(frame.offsets[-1]), 64), dtype=np.int16)
        elif marker in UNSUPPORTED_SOF:
            raise UnsupportedFrame(f"SOF marker 0x{marker:02X} (only baseline SOF0 is supported)")
        elif marker == DHT:
            _parse_dht(payload, htables)
        elif marker == DQT:
            _parse_dqt(payload, qtables)
        elif marker == DRI:
            if len(payload) != 2:
                raise MalformedStream("bad DRI segment")
            restart = struct.unpack(">H", payload)[0]
        elif marker == DNL:
            raise UnsupportedFrame("DNL marker")
        elif marker == SOS:
            if frame is None:
                raise MalformedStream("SOS before SOF")
            if header_blob is None:
                header_blob = data[:seg_end]
            pos = _decode_scan(data, seg_end, payload, frame, htables, restart, coef)
            scans += 1
            continue
        pos = seg_end

    if frame is None or coef is None:
        raise MalformedStream("no frame")
    components = []
    for ci, (cid, h, v, tq) in enumerate(frame.comps):
        gh, gw = frame.grid[ci]
        blocks = coef[frame.offsets[ci]:frame.offsets[ci + 1]].reshape(gh, gw, 64)
        components.append(Component(cid, h, v, tq, blocks.copy()))
    missing = {c.quant_id for c in components} - set(qtables)
    if missing:
        raise MalformedStream(f"undefined quant table(s) {sorted(missing)}")
    used = {c.quant_id for c in components}
    img = CoefficientImage(frame.width, frame.height, components,
                           {k: qtables[k] for k in sorted(used)}, header_blob)
    return img.validate()
