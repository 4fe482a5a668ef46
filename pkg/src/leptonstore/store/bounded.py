"""Bin storage for every probability model of one in-flight image.

A model is either *direct* (one slot per flat index, the unbounded
layout) or *set-associative*: its index range is cut into M intervals by
boundary indexes and each interval shares N ways. A way remembers the
interval-local tag of the index it was allocated to.

State lives in flat buffers (``bytearray`` / ``array``) so the pure
Python coder and the compiled kernel operate on the same memory:

    kind[m]       0 direct, 1 set-associative
    slot_base[m]  first slot of model m
    ways[m]       N (1 for direct models)
    set_base[m]   first entry of model m in ``fill``
    bnd_off[m], bnd_cnt[m]  slice of ``bnd`` holding model m's boundaries
    fill[s]       ways allocated in set s
    tags[slot]    tag held by a way
    c0, c1        bin counters per slot; the last slot is a scratch bin
    touched       one flag per global flat index (offset[m] + index)
"""
from __future__ import annotations

import bisect
from array import array
from dataclasses import dataclass

import numpy as np

from ..codec.registry import DEFAULT_REGISTRY, ModelRegistry
from ..errors import Overflow, TableMismatch
from .bins import update_counts
from .tables import OPTIMIZED


@dataclass(frozen=True)
class OverflowRecord:
    model: str
    index: int
    set_index: int
    image: str = ""


class ModelStore:
    """Bins of all models. Without tables every model is direct-mapped."""

    def __init__(self, tables=None, registry: ModelRegistry = DEFAULT_REGISTRY, track_access: bool = True):
        self.registry = registry
        self.tables = tables or {}
        unknown = set(self.tables) - set(registry.by_name)
        if unknown:
            raise TableMismatch(f"tables for unknown models: {sorted(unknown)}")
        n = len(registry)
        self.index_offset = array("q", registry.offsets.tolist())
        self.kind = bytearray(n)
        self.slot_base = array("q", [0] * n)
        self.ways = array("q", [1] * n)
        self.set_base = array("q", [0] * n)
        self.bnd_off = array("q", [0] * n)
        self.bnd_cnt = array("q", [0] * n)
        bnd = []
        slots = 0
        sets = 0
        for m in registry:
            t = self.tables.get(m.name)
            self.slot_base[m.model_id] = slots
            if t is not None and t.index_range != m.bins:
                raise TableMismatch(f"{m.name}: table range {t.index_range} != {m.bins} bins")
            if t is None or t.kind != OPTIMIZED:
                slots += m.bins
                continue
            self.kind[m.model_id] = 1
            self.ways[m.model_id] = t.ways
            self.set_base[m.model_id] = sets
            self.bnd_off[m.model_id] = len(bnd)
            self.bnd_cnt[m.model_id] = len(t.boundaries)
            bnd.extend(int(b) for b in t.boundaries)
            slots += t.mem_depth
            sets += t.sets
        self.bnd = array("q", bnd)
        self.total_slots = slots
        self.scratch = slots
        self.num_sets = sets
        self.track_access = track_access
        self.image = ""
        self.reset()

    @property
    def bounded(self) -> bool:
        return any(self.kind)

    @property
    def memory_slots(self) -> int:
        return self.total_slots

    def reset(self):
        """Forget every bin, allocation and overflow (tables stay)."""
        self.fill = array("i", bytes(4 * self.num_sets))
        self.tags = array("i", bytes(4 * self.total_slots))
        self.c0 = bytearray(self.total_slots + 1)
        self.c1 = bytearray(self.total_slots + 1)
        self.touched = bytearray(int(self.index_offset[-1]))
        self.overflow_log = []   # (model_id, index, set_index), first occurrence only
        self._overflow_seen = set()

    # -- lookup ---------------------------------------------------------------

    def set_of(self, model: int, index: int) -> int:
        lo = self.bnd_off[model]
        return bisect.bisect_right(self.bnd, index, lo, lo + self.bnd_cnt[model]) - lo

    def lookup(self, model: int, index: int):
        """Slot holding the bin of ``(model, index)``; None when its set is full."""
        if self.track_access:
            self.touched[self.index_offset[model] + index] = 1
        if not self.kind[model]:
            return self.slot_base[model] + index
        lo = self.bnd_off[model]
        s = bisect.bisect_right(self.bnd, index, lo, lo + self.bnd_cnt[model]) - lo
        tag = index - (self.bnd[lo + s - 1] if s else 0)
        n = self.ways[model]
        first = self.slot_base[model] + s * n
        fs = self.set_base[model] + s
        used = self.fill[fs]
        tags = self.tags
        for slot in range(first, first + used):
            if tags[slot] == tag:
                return slot
        if used < n:
            slot = first + used
            tags[slot] = tag
            self.fill[fs] = used + 1
            return slot
        key = (model, index)
        if key not in self._overflow_seen:
            self._overflow_seen.add(key)
            self.overflow_log.append((model, index, s))
        return None

    def slot_or_scratch(self, model: int, index: int) -> int:
        slot = self.lookup(model, index)
        if slot is None:
            # keep coding so every overflowing index of the image gets reported
            slot = self.scratch
            self.c0[slot] = self.c1[slot] = 0
        return slot

    def update(self, slot: int, bit: int):
        self.c0[slot], self.c1[slot] = update_counts(self.c0[slot], self.c1[slot], bit)

    def record_overflow(self, model: int, index: int, set_index: int):
        """Used by the compiled kernel, which reports overflows back here."""
        key = (model, index)
        if key not in self._overflow_seen:
            self._overflow_seen.add(key)
            self.overflow_log.append((model, index, set_index))

    # -- reporting ------------------------------------------------------------

    @property
    def overflowed(self) -> bool:
        return bool(self.overflow_log)

    def overflow_records(self) -> list[OverflowRecord]:
        return [OverflowRecord(self.registry[m].name, i, s, self.image) for m, i, s in self.overflow_log]

    def raise_on_overflow(self):
        if self.overflow_log:
            raise Overflow(self.overflow_records())

    def accessed(self) -> dict[str, np.ndarray]:
        """Model name -> sorted flat indexes touched since the last reset."""
        flat = np.flatnonzero(np.frombuffer(self.touched, dtype=np.uint8))
        offsets = np.asarray(self.index_offset, dtype=np.int64)
        model_of = np.searchsorted(offsets, flat, side="right") - 1
        out = {}
        if flat.size:
            cuts = np.flatnonzero(np.diff(model_of)) + 1
            for chunk, mids in zip(np.split(flat, cuts), np.split(model_of, cuts)):
                m = int(mids[0])
                out[self.registry[m].name] = chunk - offsets[m]
        return out

    def allocated(self, model: int) -> list[tuple[int, list[int]]]:
        """Per set: tags held by its allocated ways (set-associative models only)."""
        n = self.ways[model]
        out = []
        for s in range(self.tables[self.registry[model].name].sets):
            used = self.fill[self.set_base[model] + s]
            first = self.slot_base[model] + s * n
            out.append((s, list(self.tags[first:first + used])))
        return out


def unbounded_store(registry: ModelRegistry = DEFAULT_REGISTRY, track_access: bool = True) -> ModelStore:
    return ModelStore(None, registry, track_access)


BoundedStore = ModelStore
