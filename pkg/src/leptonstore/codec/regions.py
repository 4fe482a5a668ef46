"""Block regions (DC / x edge / y edge / 7x7 AC) and their coding orders."""
from __future__ import annotations

import enum

import numpy as np

from ..jpeg.image import ZIGZAG


class Region(enum.IntEnum):
    DC = 0
    X_EDGE = 1
    Y_EDGE = 2
    AC_7X7 = 3


# Coding order inside the 7x7 region, indexed [row-1][col-1].
ORDER_7X7_GRID = np.array([
    [0, 1, 5, 6, 14, 15, 27],
    [2, 4, 7, 13, 16, 26, 28],
    [3, 8, 12, 17, 25, 29, 38],
    [9, 11, 18, 24, 30, 37, 39],
    [10, 19, 23, 31, 36, 40, 45],
    [20, 22, 32, 35, 41, 44, 46],
    [21, 33, 34, 42, 43, 47, 48],
])

# raster positions in coding order
ORDER_7X7 = np.empty(49, dtype=np.intp)
for _r in range(7):
    for _c in range(7):
        ORDER_7X7[ORDER_7X7_GRID[_r, _c]] = (_r + 1) * 8 + (_c + 1)
ORDER_X_EDGE = np.arange(1, 8, dtype=np.intp)        # row 0, cols 1..7
ORDER_Y_EDGE = np.arange(8, 64, 8, dtype=np.intp)    # col 0, rows 1..7

REGION_ORDER = {
    Region.DC: np.array([0], dtype=np.intp),
    Region.X_EDGE: ORDER_X_EDGE,
    Region.Y_EDGE: ORDER_Y_EDGE,
    Region.AC_7X7: ORDER_7X7,
}

_MASK_7X7 = np.zeros(64, bool)
_MASK_7X7[ORDER_7X7] = True
_MASK_X = np.zeros(64, bool)
_MASK_X[ORDER_X_EDGE] = True
_MASK_Y = np.zeros(64, bool)
_MASK_Y[ORDER_Y_EDGE] = True


def region_of_raster(pos: int) -> Region:
    row, col = divmod(pos, 8)
    if row == 0 and col == 0:
        return Region.DC
    if row == 0:
        return Region.X_EDGE
    if col == 0:
        return Region.Y_EDGE
    return Region.AC_7X7


def classify(zigzag_pos: int) -> Region:
    if not 0 <= zigzag_pos < 64:
        raise ValueError(f"zigzag position {zigzag_pos} out of range")
    return region_of_raster(int(ZIGZAG[zigzag_pos]))


def position_in_region(zigzag_pos: int) -> int:
    """Coding-order index of a coefficient within its own region."""
    pos = int(ZIGZAG[zigzag_pos])
    region = region_of_raster(pos)
    return int(np.nonzero(REGION_ORDER[region] == pos)[0][0])


def count_nonzeros(block) -> tuple[int, int, int]:
    """(nz_7x7, nz_x_edge, nz_y_edge) for one raster-order block."""
    nz = np.asarray(block).reshape(64) != 0
    return int(nz[_MASK_7X7].sum()), int(nz[_MASK_X].sum()), int(nz[_MASK_Y].sum())
