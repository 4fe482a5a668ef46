"""Adaptive binary probability estimator (one "bin")."""
from __future__ import annotations

from dataclasses import dataclass

COUNTER_MAX = 255


@dataclass(frozen=True)
class BinState:
    c0: int = 0
    c1: int = 0

    def __post_init__(self):
        if not (0 <= self.c0 <= COUNTER_MAX and 0 <= self.c1 <= COUNTER_MAX):
            raise ValueError(f"counter out of range: {self}")


def bin_probability(b: BinState) -> float:
    """Probability that the next bit is 0 (Laplace-smoothed)."""
    return (b.c0 + 1) / (b.c0 + b.c1 + 2)


def update_counts(c0: int, c1: int, bit: int) -> tuple[int, int]:
    if bit:
        if c1 == COUNTER_MAX:
            c0 >>= 1
            c1 >>= 1
        return c0, c1 + 1
    if c0 == COUNTER_MAX:
        c0 >>= 1
        c1 >>= 1
    return c0 + 1, c1


def bin_update(b: BinState, bit: int) -> BinState:
    return BinState(*update_counts(b.c0, b.c1, bit))
