"""Per-image presence histogram of model accesses."""
from __future__ import annotations

import csv
import io

import numpy as np

from ..codec.registry import DEFAULT_REGISTRY, ModelRegistry


class AccessHistogram:
    """For every flat index: number of images in which it was accessed at least once."""

    def __init__(self, registry: ModelRegistry = DEFAULT_REGISTRY):
        self.registry = registry
        self.offsets = registry.offsets
        self.counts = np.zeros(int(self.offsets[-1]), dtype=np.int64)
        self.images_total = 0

    def add_image(self, accessed: dict):
        """Count one image given model name -> accessed flat indexes."""
        seen = np.zeros(self.counts.size, dtype=bool)
        for name, idx in accessed.items():
            seen[self.offsets[self.registry.id(name)] + np.asarray(idx, dtype=np.int64)] = True
        self.counts += seen
        self.images_total += 1

    def add_touched(self, touched):
        """Count one image from a store's global touched-flag buffer."""
        self.counts += np.frombuffer(bytes(touched), dtype=np.uint8).astype(bool)
        self.images_total += 1

    def merge(self, other: AccessHistogram) -> AccessHistogram:
        out = AccessHistogram(self.registry)
        out.counts = self.counts + other.counts
        out.images_total = self.images_total + other.images_total
        return out

    def model_counts(self, name: str) -> np.ndarray:
        m = self.registry.id(name)
        return self.counts[self.offsets[m]:self.offsets[m + 1]]

    def probabilities(self, name: str) -> np.ndarray:
        c = self.model_counts(name)
        if self.images_total == 0:
            return np.zeros(c.size)
        return c / self.images_total

    def __eq__(self, other):
        return (isinstance(other, AccessHistogram) and self.images_total == other.images_total
                and np.array_equal(self.counts, other.counts))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "flat_index", "count", "images_total"])
        for flat in np.flatnonzero(self.counts):
            m = int(np.searchsorted(self.offsets, flat, side="right") - 1)
            w.writerow([self.registry[m].name, int(flat - self.offsets[m]), int(self.counts[flat]),
                        self.images_total])
        if not self.counts.any():
            # keep images_total recoverable for an all-empty histogram
            w.writerow(["", -1, 0, self.images_total])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, registry: ModelRegistry = DEFAULT_REGISTRY) -> AccessHistogram:
        h = cls(registry)
        rows = csv.reader(io.StringIO(text))
        header = next(rows, None)
        if header != ["model", "flat_index", "count", "images_total"]:
            raise ValueError("not an access histogram CSV")
        for name, idx, count, total in rows:
            h.images_total = int(total)
            if int(idx) < 0:
                continue
            m = registry.id(name)
            h.counts[h.offsets[m] + int(idx)] = int(count)
        if np.any(h.counts > h.images_total):
            raise ValueError("histogram count exceeds images_total")
        return h


def profile_access(hist: AccessHistogram, accesses, image_id=None) -> AccessHistogram:
    """Add one image's accesses, given as an iterable of (model name, flat index) pairs."""
    per_model: dict = {}
    for name, idx in accesses:
        per_model.setdefault(name, set()).add(int(idx))
    hist.add_image({k: np.fromiter(v, dtype=np.int64) for k, v in per_model.items()})
    return hist
