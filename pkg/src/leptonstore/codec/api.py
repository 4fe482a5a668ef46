"""Whole-image encode / decode on top of the coding loop and the model store."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import CorruptStream, Overflow, TableMismatch
from ..jpeg.image import CoefficientImage, Component
from ..store.bounded import ModelStore, OverflowRecord
from ..store.tables import TableSet
from .container import BOUNDED, MODE_NAMES, UNBOUNDED, UNBOUNDED_FALLBACK, Container, parse_container
from .registry import DEFAULT_REGISTRY, ModelRegistry


@dataclass
class EncodeResult:
    data: bytes
    mode: int
    overflow: list = field(default_factory=list)   # OverflowRecords of a failed bounded attempt
    accessed: dict | None = None                    # model -> flat indexes (when requested)

    @property
    def mode_name(self) -> str:
        return MODE_NAMES[self.mode]

    @property
    def size(self) -> int:
        return len(self.data)


def _grids(img: CoefficientImage):
    return [c.blocks for c in img.components]


def _quants(quant_tables, quant_ids):
    return [quant_tables[q].raster().astype(np.int64) for q in quant_ids]


def _container(img, mode, thash, payload) -> bytes:
    comps = [(c.component_id, c.h_samp, c.v_samp, c.quant_id, c.width_blocks, c.height_blocks)
             for c in img.components]
    return Container(mode, thash, img.width, img.height, comps, dict(img.quant_tables),
                     img.header_blob or b"", payload).to_bytes()


def encode_payload(img: CoefficientImage, store: ModelStore) -> bytes:
    """Arithmetic-coded payload; overflows end up in ``store.overflow_log``."""
    store.reset()
    store.image = img.name or ""
    return kernels.encode_blocks(_grids(img), _quants(img.quant_tables, [c.quant_id for c in img.components]),
                                 store)


def encode_image(img: CoefficientImage, tables=None, registry: ModelRegistry = DEFAULT_REGISTRY,
                 fallback: bool = False, collect_access: bool = False) -> EncodeResult:
    """Compress one image.

    ``tables=None`` encodes with a dedicated bin per index. With tables, a
    bounded encode is attempted; if any set overflows, ``Overflow`` is
    raised unless ``fallback`` is set, in which case the image is
    re-encoded unbounded and the records are kept on the result.
    """
    img.validate()
    if tables is None:
        store = ModelStore(None, registry, track_access=collect_access)
        payload = encode_payload(img, store)
        return EncodeResult(_container(img, UNBOUNDED, 0, payload), UNBOUNDED,
                            accessed=store.accessed() if collect_access else None)
    tables = TableSet(tables)
    store = ModelStore(tables, registry, track_access=collect_access)
    payload = encode_payload(img, store)
    if not store.overflowed:
        return EncodeResult(_container(img, BOUNDED, tables.content_hash(), payload), BOUNDED,
                            accessed=store.accessed() if collect_access else None)
    records = store.overflow_records()
    if not fallback:
        raise Overflow(records)
    accessed = store.accessed() if collect_access else None
    store = ModelStore(None, registry, track_access=False)
    payload = encode_payload(img, store)
    return EncodeResult(_container(img, UNBOUNDED_FALLBACK, 0, payload), UNBOUNDED_FALLBACK, records, accessed)


def decode_image(data: bytes, tables=None, registry: ModelRegistry = DEFAULT_REGISTRY) -> CoefficientImage:
    c = parse_container(data)
    if c.mode == BOUNDED:
        if tables is None:
            raise TableMismatch("bounded container needs the allocation tables it was encoded with")
        tables = TableSet(tables)
        if tables.content_hash() != c.tables_hash:
            raise TableMismatch(f"tables hash {tables.content_hash():08x} != container {c.tables_hash:08x}")
        store = ModelStore(tables, registry, track_access=False)
    else:
        store = ModelStore(None, registry, track_access=False)
    for cid, _, _, tq, _, _ in c.components:
        if tq not in c.quant_tables:
            raise CorruptStream(f"component {cid} references missing quant table {tq}")
    quants = _quants(c.quant_tables, [comp[3] for comp in c.components])
    grids = kernels.decode_blocks(c.payload, c.shapes, quants, store)
    comps = [Component(cid, h, v, tq, g) for (cid, h, v, tq, _, _), g in zip(c.components, grids)]
    return CoefficientImage(c.width, c.height, comps, c.quant_tables, c.header_blob).validate()


def container_mode(data: bytes) -> str:
    return parse_container(data).mode_name


def access_sets(img: CoefficientImage, registry: ModelRegistry = DEFAULT_REGISTRY) -> dict:
    """Model name -> sorted flat indexes accessed by an unbounded encode of ``img``."""
    store = ModelStore(None, registry, track_access=True)
    encode_payload(img, store)
    return store.accessed()


__all__ = ["EncodeResult", "encode_image", "decode_image", "encode_payload", "access_sets",
           "container_mode", "OverflowRecord", "BOUNDED", "UNBOUNDED", "UNBOUNDED_FALLBACK"]
