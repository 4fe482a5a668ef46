"""Utilization, overflow rates, depth sweeps, minimum depths and the memory cost rule.

Overflow is evaluated from access sets: the coding loop's sequence of
model indexes depends only on the coefficients (never on bin state), so
a bounded store overflows on an image exactly when some set receives
more than N distinct indexes of that image. ``tests`` cross-check this
against real bounded encodes.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..codec.registry import DEFAULT_REGISTRY, ModelRegistry
from ..errors import DegenerateProfile, EmptyCorpus, Unsatisfiable
from ..store.histogram import AccessHistogram
from ..store.tables import OPTIMIZED, AllocationTable, build_table

log = logging.getLogger(__name__)

DEFAULT_MA_RATIO = 0.3
OPTIMIZED_CHOICE = "OPTIMIZED"
ORIGINAL_CHOICE = "ORIGINAL"


# -- utilization ----------------------------------------------------------------

@dataclass(frozen=True)
class UtilizationRow:
    model: str
    used: float      # mean number of bins one image uses
    total: int
    ratio: float


def utilization(hist: AccessHistogram, models=None) -> list[UtilizationRow]:
    """Per-image used-bin ratio averaged over the corpus.

    The mean number of bins an image touches equals the sum of the
    presence counts divided by the number of images.
    """
    if hist.images_total == 0:
        raise EmptyCorpus("histogram holds no images")
    reg = hist.registry
    specs = reg.models if models is None else [reg[m] if isinstance(m, str) else m for m in models]
    rows = []
    for m in specs:
        used = float(hist.model_counts(m.name).sum()) / hist.images_total
        rows.append(UtilizationRow(m.name, used, m.bins, used / m.bins))
    return rows


# -- overflow -------------------------------------------------------------------

def set_loads(indexes: np.ndarray, table: AllocationTable) -> np.ndarray:
    """Distinct indexes per set for one image's access set of one model."""
    sets = np.searchsorted(table.boundaries, indexes, side="right")
    return np.bincount(sets, minlength=table.sets)


def image_overflows(indexes: np.ndarray, table: AllocationTable | None) -> bool:
    if table is None or table.kind != OPTIMIZED or len(indexes) == 0:
        return False
    if len(indexes) <= table.ways:
        return False
    return bool(set_loads(indexes, table).max() > table.ways)


def overflow_flags(profile, tables) -> np.ndarray:
    """Per image: True if any model of ``tables`` overflows."""
    flags = np.zeros(len(profile), dtype=bool)
    for name, table in tables.items():
        for i, idx in enumerate(profile.model_sets(name)):
            if not flags[i] and image_overflows(idx, table):
                flags[i] = True
    return flags


def overflow_rate(profile, tables) -> float:
    """Fraction of images with at least one overflow anywhere."""
    if len(profile) == 0:
        raise EmptyCorpus("empty corpus")
    return float(overflow_flags(profile, tables).mean())


def model_overflow_rate(sets: list, table: AllocationTable) -> float:
    if not sets:
        raise EmptyCorpus("empty corpus")
    return sum(image_overflows(s, table) for s in sets) / len(sets)


# -- depth search ---------------------------------------------------------------

def table_for(hist: AccessHistogram, model: str, depth: int, ways: int) -> AllocationTable:
    """Table of ``model`` at ``depth``; a profile with no mass keeps the original layout."""
    P = hist.probabilities(model)
    if not P.any():
        raise DegenerateProfile(f"{model} was never accessed in the statistical corpus")
    return build_table(model, P, depth, ways)


def depth_grid(index_range: int, ways: int, depths) -> list[int]:
    out = sorted({int(d) for d in depths if d >= ways and d % ways == 0})
    return out


def sweep(stat, test, hist: AccessHistogram, models, ways_list, depths, families=None) -> list[tuple]:
    """Overflow rate per (model, N, depth, split).

    ``depths`` may be a list or a callable ``(index_range, N) -> list``.
    With ``families`` (name -> model list) a row per family is added in
    which an image fails if any member model overflows.
    """
    rows = []
    splits = (("statistical", stat), ("test", test))
    fam_flags = {}
    reg = hist.registry
    for model in models:
        spec = reg[model]
        for ways in ways_list:
            grid = depths(spec.bins, ways) if callable(depths) else depths
            for depth in depth_grid(spec.bins, ways, grid):
                try:
                    table = table_for(hist, model, depth, ways)
                except DegenerateProfile:
                    table = None
                for split, prof in splits:
                    flags = np.array([image_overflows(s, table) for s in prof.model_sets(model)], dtype=bool)
                    rows.append((model, ways, depth, split, float(flags.mean()) if flags.size else 0.0))
                    for fam, members in (families or {}).items():
                        if model in members:
                            key = (fam, ways, depth, split)
                            prev = fam_flags.get(key)
                            fam_flags[key] = flags if prev is None else (prev | flags)
    for (fam, ways, depth, split), flags in sorted(fam_flags.items()):
        rows.append((fam, ways, depth, split, float(flags.mean()) if flags.size else 0.0))
    return rows


@dataclass(frozen=True)
class MinDepth:
    model: str
    ways: int
    depth: int
    index_range: int

    @property
    def saving(self) -> float:
        return memory_saving(self.depth, self.index_range)


def memory_saving(depth: int, index_range: int) -> float:
    return max(0.0, 1.0 - depth / index_range)


def min_depth(hist: AccessHistogram, splits, model: str, ways: int) -> MinDepth:
    """Smallest multiple of ``ways`` giving zero overflow on every split in ``splits``.

    Exponential doubling from N, then bisection on multiples of N. A model
    never accessed anywhere needs a single set. If the statistical profile
    is empty but other splits do access the model, no hashed table can be
    built and the full index range (rounded up to a multiple of N) is
    returned.
    """
    spec = hist.registry[model]
    rng = spec.bins
    full = math.ceil(rng / ways) * ways
    sets_per_split = [prof.model_sets(model) for prof in splits]
    if not any(len(s) for sets in sets_per_split for s in sets):
        return MinDepth(model, ways, ways, rng)
    if not hist.probabilities(model).any():
        return MinDepth(model, ways, full, rng)

    def ok(depth: int) -> bool:
        if depth >= rng:
            return True
        table = table_for(hist, model, depth, ways)
        return not any(image_overflows(s, table) for sets in sets_per_split for s in sets)

    lo, hi = 0, ways
    while not ok(hi):
        if hi >= rng:
            raise Unsatisfiable(f"{model}: overflow even with a dedicated slot per index")
        lo, hi = hi, min(hi * 2, full)
    # lo fails (or is 0), hi passes
    while hi - lo > ways:
        mid = (lo + hi) // 2
        mid -= mid % ways
        if mid <= lo:
            mid = lo + ways
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return MinDepth(model, ways, min(hi, full), rng)


# -- cost rule ------------------------------------------------------------------

def cost_decision(index_range: int, depth: int, ma_ratio: float = DEFAULT_MA_RATIO) -> str:
    """Hashed storage pays off iff depth/range < MA_orig/MA_opt."""
    if ma_ratio <= 0:
        raise ValueError("ma_ratio must be positive")
    return OPTIMIZED_CHOICE if depth / index_range < ma_ratio else ORIGINAL_CHOICE


# -- CSV ------------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def utilization_csv(rows) -> str:
    return _csv(["model", "used", "total", "ratio"],
                [(r.model, f"{r.used:.6f}", r.total, f"{r.ratio:.8f}") for r in rows])


def sweep_csv(rows) -> str:
    return _csv(["model", "N", "depth", "split", "overflow_rate"],
                [(m, n, d, s, f"{r:.6f}") for m, n, d, s, r in rows])


def mindepth_csv(rows) -> str:
    return _csv(["model", "N", "depth", "index_range", "saving"],
                [(r.model, r.ways, r.depth, r.index_range, f"{r.saving:.6f}") for r in rows])


def combined_saving(rows) -> float:
    """1 - sum(depth) / sum(range) over a group of MinDepth rows."""
    total = sum(r.index_range for r in rows)
    return 1.0 - sum(min(r.depth, r.index_range) for r in rows) / total


def check_monotone(rows) -> list[tuple]:
    """(model, N, split, depth) points where the overflow rate rises with depth."""
    bad = []
    series = {}
    for m, n, d, s, r in rows:
        series.setdefault((m, n, s), []).append((d, r))
    for (m, n, s), pts in series.items():
        pts.sort()
        for (d0, r0), (d1, r1) in zip(pts, pts[1:]):
            if r1 > r0 + 1e-12:
                bad.append((m, n, s, d1))
    for item in bad:
        log.warning("overflow rate increases with depth: %s", item)
    return bad
