"""Probability-model storage: bins, access profiling, hashed set-associative tables."""
from .bins import BinState, bin_probability, bin_update
from .bounded import BoundedStore, ModelStore, OverflowRecord, unbounded_store
from .hashing import build_hash, build_weights, derive_boundaries, space, tag_width
from .histogram import AccessHistogram, profile_access
from .tables import AllocationTable, TableSet, build_table, load_tables, save_tables

__all__ = ["BinState", "bin_probability", "bin_update", "BoundedStore", "ModelStore", "OverflowRecord",
           "unbounded_store", "build_hash", "build_weights", "derive_boundaries", "space", "tag_width",
           "AccessHistogram", "profile_access", "AllocationTable", "TableSet", "build_table",
           "load_tables", "save_tables"]
