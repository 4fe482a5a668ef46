"""Access-probability hash: allocation weights, CDF hash and set boundaries."""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateProfile, IndivisibleDepth

WEIGHT_EPS = 1e-9
MAX_ITERATIONS = 10_000
# slack when comparing fractional hash positions against set starts
BOUNDARY_TOL = 1e-6


def _water_fill(w: np.ndarray, cap: float) -> np.ndarray:
    """Clip to ``cap`` and hand the freed mass to the uncapped entries, proportionally."""
    w = w.copy()
    capped = w > cap
    while True:
        w[capped] = cap
        free = (~capped) & (w > 0)
        rest = 1.0 - cap * np.count_nonzero(capped)
        mass = w[free].sum()
        if mass <= 0:
            return w
        w[free] *= rest / mass
        over = free & (w > cap)
        if not over.any():
            return w
        capped |= over


def build_weights(P, mem_depth: int, eps: float = WEIGHT_EPS, max_iter: int = MAX_ITERATIONS) -> np.ndarray:
    """Memory-allocation weight per index from access probabilities.

    Iterated clip-to-1/depth and renormalisation; once the loop stops (max
    within ``eps`` of the cap or ``max_iter`` rounds) one exact clip with
    proportional redistribution lands on the fixed point. If fewer indexes
    are active than ``mem_depth`` the cap cannot be met and every active
    index gets an equal share instead.
    """
    if mem_depth < 1:
        raise ValueError("mem_depth must be >= 1")
    P = np.asarray(P, dtype=np.float64)
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ValueError("probabilities must be finite and non-negative")
    total = P.sum()
    if total <= 0:
        raise DegenerateProfile("no index has a positive access probability")
    W = P / total
    active = W > 0
    k = int(np.count_nonzero(active))
    if k <= mem_depth:
        return np.where(active, 1.0 / k, 0.0)

    cap = 1.0 / mem_depth
    limit = cap * (1.0 + eps)
    # zero entries stay zero throughout, so iterate on the active ones only
    w = W[active]
    for _ in range(max_iter):
        if w.max() <= limit:
            break
        w = np.minimum(w, cap)
        w /= w.sum()
    W = np.zeros_like(W)
    W[active] = _water_fill(w, cap)
    return W


def build_hash(W, mem_depth: int) -> np.ndarray:
    """Fractional slot position of each index: depth times the cumulative weight."""
    return mem_depth * np.cumsum(np.asarray(W, dtype=np.float64))


def space(H) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    return np.diff(H, prepend=0.0)


def derive_boundaries(H, ways: int, mem_depth: int | None = None) -> np.ndarray:
    """First index of each of the sets 1..M-1.

    Index i starts at H(i-1); set k begins at the first index whose start
    reaches k*ways. A boundary equal to the index range marks an empty
    trailing set; repeated boundaries mark empty sets in between.
    """
    H = np.asarray(H, dtype=np.float64)
    if mem_depth is None:
        mem_depth = int(round(H[-1]))
    if ways < 1 or mem_depth % ways:
        raise IndivisibleDepth(f"depth {mem_depth} is not a multiple of {ways} ways")
    sets = mem_depth // ways
    starts = np.concatenate([[0.0], H[:-1]])
    targets = np.arange(1, sets, dtype=np.float64) * ways - BOUNDARY_TOL
    return np.searchsorted(starts, targets, side="left").astype(np.int64)


def tag_width(interval_width: int) -> int:
    """Bits needed to tell apart the indexes of one interval."""
    if interval_width < 0:
        raise ValueError("negative interval width")
    return max(int(interval_width) - 1, 0).bit_length()
