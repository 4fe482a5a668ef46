"""Context derivation from already-coded neighbour blocks.

Every function here depends only on data the decoder has reconstructed
before the value being coded, so encoder and decoder derive identical
contexts.
"""
from __future__ import annotations

from dataclasses import dataclass

from .regions import Region

PRIOR_RANGE = 11
NZ_LEFT_RANGE = {Region.AC_7X7: 10, Region.X_EDGE: 7, Region.Y_EDGE: 7}
SPREAD_RANGE = 17
NZ_TOTAL_RANGE = 6


@dataclass(frozen=True)
class ContextFields:
    flag_c: int
    prior: int
    num_nz_left: int
    idx_zigzag: int


def colour_flag(component_index: int) -> int:
    """Luma vs chroma."""
    return 0 if component_index == 0 else 1


def coefficient_prior(left, above, pos: int) -> int:
    """Bit length of the rounded mean |coefficient| at ``pos`` in the left/above blocks.

    A missing neighbour contributes zero.
    """
    a = abs(int(left[pos])) if left is not None else 0
    b = abs(int(above[pos])) if above is not None else 0
    return min(((a + b + 1) >> 1).bit_length(), PRIOR_RANGE - 1)


# 8192 * c(v) * cos(v*pi/16), c(0) = 1/sqrt(2): DCT basis value at the block border
EDGE_WEIGHTS = (5793, 8035, 7568, 6811, 5793, 4551, 3135, 1598)


def edge_prediction(current, ref, axis: int, u: int, quant) -> int:
    """Predict the edge coefficient at frequency ``u`` from pixel continuity.

    axis 0 predicts (row 0, col u) of ``current`` from the block above,
    axis 1 predicts (row u, col 0) from the block to the left. The 1-D
    signal along the shared border is assumed continuous: the neighbour's
    last line equals the current block's first line. The current block's
    already-coded 7x7 coefficients on the same line are subtracted.
    Integer arithmetic, rounded half away from zero; 0 without a neighbour.
    """
    if ref is None:
        return 0
    num = 0
    for v in range(8):
        k = v * 8 + u if axis == 0 else u * 8 + v
        t = int(ref[k]) * int(quant[k]) * EDGE_WEIGHTS[v]
        num += -t if v & 1 else t
        if v:
            num -= int(current[k]) * int(quant[k]) * EDGE_WEIGHTS[v]
    k0 = u if axis == 0 else u * 8
    den = int(quant[k0]) * EDGE_WEIGHTS[0]
    p = (abs(num) + den // 2) // den
    return -p if num < 0 else p


def edge_prior(prediction: int) -> int:
    return min(abs(prediction).bit_length(), PRIOR_RANGE - 1)


def signed_bucket(prediction: int) -> int:
    """0 for no prediction, 1..5 positive magnitude classes, 6..10 negative ones."""
    if prediction == 0:
        return 0
    return min(abs(prediction).bit_length(), 5) + (5 if prediction < 0 else 0)


def mean_available(a, b) -> int:
    """Rounded mean of the values that are not None (0 when both are)."""
    if a is None:
        return 0 if b is None else int(b)
    if b is None:
        return int(a)
    return (int(a) + int(b) + 1) >> 1


def predict_dc(left, above, current=None) -> int:
    """Rounded average of the neighbours' DC values, 0 at the top-left corner."""
    return mean_available(None if left is None else left[0], None if above is None else above[0])


def dc_spread(left, above) -> int:
    """How strongly the two DC neighbours disagree (0 unless both exist)."""
    if left is None or above is None:
        return 0
    return min(abs(int(left[0]) - int(above[0])).bit_length(), SPREAD_RANGE - 1)


def nz_total_bucket(nz77: int, nzx: int, nzy: int) -> int:
    return min((nz77 + nzx + nzy).bit_length(), NZ_TOTAL_RANGE - 1)


def nz_left_bucket(region: Region, remaining: int) -> int:
    return min(remaining, NZ_LEFT_RANGE[region] - 1)


def compute_context(region: Region, component_index: int, left, above, pos: int, position: int,
                    nz_remaining: int, nz_counts=(0, 0, 0), current=None, quant=None) -> ContextFields:
    """Context of an exponent code.

    ``pos`` is the raster position of the coefficient, ``position`` its
    index in the region's coding order. In the 7x7 region the prior
    comes from the co-located neighbour coefficients; on the edges it is
    the size of the border-continuity prediction, which also needs the
    current block's 7x7 coefficients (``current``) and the raster quant
    table (``quant``, all ones if omitted). For the DC region the prior
    slot carries the neighbour DC spread and num_nz_left the bucketed
    total of nonzero AC coefficients (``nz_counts``).
    """
    flag = colour_flag(component_index)
    if region == Region.DC:
        return ContextFields(flag, dc_spread(left, above), nz_total_bucket(*nz_counts), 0)
    if region == Region.AC_7X7:
        prior = coefficient_prior(left, above, pos)
    else:
        axis = 0 if region == Region.X_EDGE else 1
        current = [0] * 64 if current is None else current
        quant = [1] * 64 if quant is None else quant
        prior = edge_prior(edge_prediction(current, above if axis == 0 else left, axis, position + 1, quant))
    return ContextFields(flag, prior, nz_left_bucket(region, nz_remaining), position)
