"""In-memory representation of a decoded (but not dequantized) JPEG."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidImage

# ZIGZAG[k] = raster position (row*8 + col) of the k-th coefficient in zigzag order
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.intp)

# RASTER_TO_ZIGZAG[raster position] = zigzag index
RASTER_TO_ZIGZAG = np.argsort(ZIGZAG)


@dataclass
class QuantTable:
    table_id: int
    values: np.ndarray  # 64 x uint16, zigzag order

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint16).reshape(64)
        if np.any(self.values < 1):
            raise InvalidImage(f"quant table {self.table_id} has a zero entry")

    def raster(self) -> np.ndarray:
        out = np.empty(64, dtype=np.uint16)
        out[ZIGZAG] = self.values
        return out

    def __eq__(self, other):
        return (isinstance(other, QuantTable) and self.table_id == other.table_id
                and np.array_equal(self.values, other.values))


@dataclass
class Component:
    """One colour component: a (height_blocks, width_blocks, 64) int16 grid.

    Blocks hold coefficients in raster order; the grid covers the whole
    MCU-padded area of the frame.
    """
    component_id: int
    h_samp: int
    v_samp: int
    quant_id: int
    blocks: np.ndarray

    def __post_init__(self):
        self.blocks = np.ascontiguousarray(self.blocks, dtype=np.int16)
        if self.blocks.ndim != 3 or self.blocks.shape[2] != 64:
            raise InvalidImage(f"component {self.component_id}: bad block grid shape {self.blocks.shape}")

    @property
    def height_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def width_blocks(self) -> int:
        return self.blocks.shape[1]

    def __eq__(self, other):
        return (isinstance(other, Component)
                and (self.component_id, self.h_samp, self.v_samp, self.quant_id)
                == (other.component_id, other.h_samp, other.v_samp, other.quant_id)
                and self.blocks.shape == other.blocks.shape
                and np.array_equal(self.blocks, other.blocks))


@dataclass
class CoefficientImage:
    width: int
    height: int
    components: list[Component]
    quant_tables: dict[int, QuantTable]
    header_blob: bytes = b""
    # free-form label used in overflow records and reports; not serialized
    name: str = field(default="", compare=False)

    def validate(self):
        if not 1 <= len(self.components) <= 4:
            raise InvalidImage(f"{len(self.components)} components")
        if not (0 < self.width < 65536 and 0 < self.height < 65536):
            raise InvalidImage(f"bad geometry {self.width}x{self.height}")
        for comp in self.components:
            if comp.quant_id not in self.quant_tables:
                raise InvalidImage(f"component {comp.component_id} references missing quant table {comp.quant_id}")
        return self

    @property
    def num_blocks(self) -> int:
        return sum(c.height_blocks * c.width_blocks for c in self.components)

    def same_coefficients(self, other: CoefficientImage) -> bool:
        if len(self.components) != len(other.components):
            return False
        return all(a.blocks.shape == b.blocks.shape and np.array_equal(a.blocks, b.blocks)
                   for a, b in zip(self.components, other.components))
