"""Turning a profile into a full set of allocation tables (the hybrid policy)."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateProfile, IndivisibleDepth
from ..store.bounded import OverflowRecord
from ..store.histogram import AccessHistogram
from ..store.tables import AllocationTable, TableSet
from .metrics import DEFAULT_MA_RATIO, OPTIMIZED_CHOICE, ORIGINAL_CHOICE, cost_decision, min_depth, table_for

log = logging.getLogger(__name__)

FIXED = "fixed"
MIN_ZERO_OVERFLOW = "min-zero-overflow"


@dataclass(frozen=True)
class ModelPlan:
    model: str
    index_range: int
    depth: int
    choice: str
    note: str = ""


def plan_tables(hist: AccessHistogram, ways: int, policy: str = FIXED, depth=None, splits=None,
                ma_ratio: float = DEFAULT_MA_RATIO, models=None) -> tuple[TableSet, list[ModelPlan]]:
    """Tables for every model of the registry.

    ``depth`` is an int (same budget for all models) or a dict model->depth
    under the fixed policy; under ``min-zero-overflow`` it is searched per
    model on ``splits``. A model is hashed only when the cost rule says so;
    the rest keep a direct-mapped identity table.
    """
    if ways < 1:
        raise ValueError("ways must be >= 1")
    reg = hist.registry
    wanted = None if models is None else {m if isinstance(m, str) else m.name for m in models}
    tables = TableSet()
    plans = []
    for spec in reg:
        rng = spec.bins
        if wanted is not None and spec.name not in wanted:
            tables[spec.name] = AllocationTable.identity(spec.name, rng)
            plans.append(ModelPlan(spec.name, rng, rng, ORIGINAL_CHOICE, "not selected"))
            continue
        if policy == MIN_ZERO_OVERFLOW:
            if not splits:
                raise ValueError("min-zero-overflow needs per-image corpus profiles")
            d = min_depth(hist, splits, spec.name, ways).depth
        elif policy == FIXED:
            d = depth.get(spec.name, rng) if isinstance(depth, dict) else depth
            if d is None:
                raise ValueError("fixed policy needs a depth")
            d = int(d)
            if d < rng and d % ways:
                raise IndivisibleDepth(f"{spec.name}: depth {d} is not a multiple of {ways}")
        else:
            raise ValueError(f"unknown depth policy {policy!r}")
        choice = cost_decision(rng, min(d, rng), ma_ratio)
        note = ""
        if choice == OPTIMIZED_CHOICE:
            try:
                tables[spec.name] = table_for(hist, spec.name, d, ways)
            except DegenerateProfile as exc:
                log.warning("%s; keeping the original layout", exc)
                choice, note = ORIGINAL_CHOICE, "degenerate profile"
        if choice == ORIGINAL_CHOICE:
            tables[spec.name] = AllocationTable.identity(spec.name, rng)
        plans.append(ModelPlan(spec.name, rng, min(d, rng), choice, note))
    tables.validate()
    return tables, plans


def plan_csv(plans) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "index_range", "depth", "choice", "note"])
    for p in plans:
        w.writerow([p.model, p.index_range, p.depth, p.choice, p.note])
    return buf.getvalue()


# -- overflow side log -----------------------------------------------------------

LOG_HEADER = ["model", "index", "set_index", "image"]


def overflow_log_lines(records, with_header: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if with_header:
        w.writerow(LOG_HEADER)
    for r in records:
        w.writerow([r.model, r.index, r.set_index, r.image])
    return buf.getvalue()


def read_overflow_log(text: str) -> list[OverflowRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [OverflowRecord(r["model"], int(r["index"]), int(r["set_index"]), r["image"]) for r in rows]


def merge_overflow_log(hist: AccessHistogram, records) -> AccessHistogram:
    """Histogram with every logged (image, model, index) counted as one more presence.

    Indexes that overflowed gain probability mass, so the next build gives
    their region of the index space more sets.
    """
    out = hist.merge(AccessHistogram(hist.registry))
    seen = {(r.image, r.model, r.index) for r in records}
    for _, model, index in sorted(seen):
        m = hist.registry.id(model)
        out.counts[hist.offsets[m] + index] += 1
    np.minimum(out.counts, max(out.images_total, 1), out=out.counts)
    return out
