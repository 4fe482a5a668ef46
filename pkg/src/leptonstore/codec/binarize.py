"""Exponent / sign / residual binarization of coefficient values."""
from __future__ import annotations

from dataclasses import dataclass

# Number of exponent bit positions per family; the unary code of the
# largest exponent drops its terminating zero.
EXP_POSITIONS = 11
MAX_EXPONENT = EXP_POSITIONS

EXP_FAMILIES = ("exp_7x7", "exp_edge", "exp_dc")


@dataclass(frozen=True)
class Binarized:
    exponent_bits: tuple
    sign_bit: int | None
    residual_bits: tuple


def binarize(v: int, max_exponent: int = 15) -> Binarized:
    v = int(v)
    mag = abs(v)
    e = mag.bit_length()
    if e > max_exponent:
        raise ValueError(f"|{v}| needs exponent {e} > {max_exponent}")
    exp_bits = (1,) * e + ((0,) if e < max_exponent else ())
    if e == 0:
        return Binarized(exp_bits, None, ())
    residual = tuple((mag >> j) & 1 for j in range(e - 2, -1, -1))
    return Binarized(exp_bits, 1 if v < 0 else 0, residual)


def debinarize(b: Binarized) -> int:
    e = 0
    for bit in b.exponent_bits:
        if not bit:
            break
        e += 1
    if e == 0:
        return 0
    mag = 1
    for bit in b.residual_bits:
        mag = (mag << 1) | bit
    return -mag if b.sign_bit else mag


def model_for_exponent_bit(family: str, bit_pos: int) -> str:
    if family not in EXP_FAMILIES:
        raise ValueError(f"unknown exponent family {family!r}")
    if not 0 <= bit_pos < EXP_POSITIONS:
        raise ValueError(f"exponent bit {bit_pos} outside 0..{EXP_POSITIONS - 1}")
    return f"{family}_{bit_pos}"
