"""Corpus profiling and the store-sizing analyses built on it."""
from .metrics import (
    DEFAULT_MA_RATIO, ORIGINAL_CHOICE, OPTIMIZED_CHOICE, MinDepth, UtilizationRow, check_monotone,
    combined_saving, cost_decision, image_overflows, memory_saving, min_depth, mindepth_csv,
    model_overflow_rate, overflow_flags, overflow_rate, set_loads, sweep, sweep_csv, table_for,
    utilization, utilization_csv,
)
from .profile import CorpusProfile, list_jpegs, profile_corpus, profile_paths

__all__ = [
    "CorpusProfile", "list_jpegs", "profile_corpus", "profile_paths",
    "DEFAULT_MA_RATIO", "ORIGINAL_CHOICE", "OPTIMIZED_CHOICE", "MinDepth", "UtilizationRow",
    "check_monotone", "combined_saving", "cost_decision", "image_overflows", "memory_saving",
    "min_depth", "mindepth_csv", "model_overflow_rate", "overflow_flags", "overflow_rate", "set_loads",
    "sweep", "sweep_csv", "table_for", "utilization", "utilization_csv",
]
from .planning import (  # noqa: E402
    FIXED, MIN_ZERO_OVERFLOW, ModelPlan, merge_overflow_log, overflow_log_lines, plan_csv, plan_tables,
    read_overflow_log,
)

__all__ += ["FIXED", "MIN_ZERO_OVERFLOW", "ModelPlan", "merge_overflow_log", "overflow_log_lines", "plan_csv",
            "plan_tables", "read_overflow_log"]
