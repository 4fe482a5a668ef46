"""Probability-model registry: names, context layouts and bin counts.

Every model keeps the bin count of the reference Lepton model list (77
models, 685034 bins in total). Where the factorisation of a count into
context fields is not published, the layout below is our own choice; the
field order is the flattening order (first field most significant).

    exp_7x7_k    colour 2 x prior 11 x nz_left 10 x position 49        = 10780
    exp_edge_k   colour 2 x axis 2 x prior 11 x nz_left 7 x position 7 = 2156
    exp_dc_k     colour 2 x spread 17 x nz_total 6                      = 204
    res_7x7_j    colour 2 x exponent 10 x prior 9 x row 7               = 1260
    res_edge_j   colour 2 x axis 2 x exponent 7 x prior 7               = 196
    res_dc_j     colour 2 x spread 6                                    = 12
    res_thres_k  colour 2 x axis 2 x exponent 16 x position 8 x prior 8
                 x history 2**k (k < 7; res_thres_7 has no history)     = 4096 * 2**k
    nz_7x7_k     colour 2 x neighbours 10 x prefix (25,13,7,4,2,1)[k]
    nz_edgex_k   colour 2 x nz_7x7 8 x neighbours 8 x prefix (4,2,1)[k]
    nz_edgey_k   same as nz_edgex_k
    sign         colour 2 x region 3 x prior 11                         = 66
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import FieldOutOfRange


@dataclass(frozen=True)
class IndexLayout:
    fields: tuple  # ((name, range), ...)

    def __post_init__(self):
        for name, rng in self.fields:
            if rng < 1:
                raise ValueError(f"field {name} has range {rng}")

    @property
    def ranges(self) -> tuple:
        return tuple(r for _, r in self.fields)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.fields)

    @property
    def size(self) -> int:
        return math.prod(self.ranges)

    @property
    def bit_width(self) -> int:
        """Width of the unflattened index made of concatenated binary fields."""
        return sum((r - 1).bit_length() for r in self.ranges)

    @property
    def strides(self) -> tuple:
        out = []
        acc = 1
        for r in reversed(self.ranges):
            out.append(acc)
            acc *= r
        return tuple(reversed(out))


def flatten(values, layout: IndexLayout) -> int:
    """Mixed-radix collapse of context field values (first field most significant)."""
    values = tuple(values)
    if len(values) != len(layout.fields):
        raise FieldOutOfRange(f"expected {len(layout.fields)} fields, got {len(values)}")
    idx = 0
    for v, (name, rng) in zip(values, layout.fields):
        if not 0 <= v < rng:
            raise FieldOutOfRange(f"field {name}={v} outside [0, {rng})")
        idx = idx * rng + v
    return idx


def unflatten(index: int, layout: IndexLayout) -> tuple:
    if not 0 <= index < layout.size:
        raise FieldOutOfRange(f"index {index} outside [0, {layout.size})")
    out = []
    for rng in reversed(layout.ranges):
        index, v = divmod(index, rng)
        out.append(v)
    return tuple(reversed(out))


@dataclass(frozen=True)
class ModelSpec:
    model_id: int
    name: str
    family: str
    layout: IndexLayout

    @property
    def bins(self) -> int:
        return self.layout.size


NZ_7X7_PREFIX = (25, 13, 7, 4, 2, 1)
NZ_EDGE_PREFIX = (4, 2, 1)


def _default_models():
    L = IndexLayout
    models = []

    def add(name, family, *fields):
        models.append((name, family, L(tuple(fields))))

    for k in range(11):
        add(f"exp_7x7_{k}", "exp_7x7", ("colour", 2), ("prior", 11), ("nz_left", 10), ("position", 49))
    for k in range(11):
        add(f"exp_edge_{k}", "exp_edge", ("colour", 2), ("axis", 2), ("prior", 11), ("nz_left", 7),
            ("position", 7))
    for k in range(11):
        add(f"exp_dc_{k}", "exp_dc", ("colour", 2), ("spread", 17), ("nz_total", 6))
    for j in range(10):
        add(f"res_7x7_{j}", "res_7x7", ("colour", 2), ("exponent", 10), ("prior", 9), ("row", 7))
    for j in range(3):
        add(f"res_edge_{j}", "res_edge", ("colour", 2), ("axis", 2), ("exponent", 7), ("prior", 7))
    for j in range(10):
        add(f"res_dc_{j}", "res_dc", ("colour", 2), ("spread", 6))
    for k in range(8):
        base = (("colour", 2), ("axis", 2), ("exponent", 16), ("position", 8), ("prior", 8))
        hist = (("history", 1 << k),) if k < 7 else ()
        add(f"res_thres_{k}", "res_thres", *(base + hist))
    for k in range(6):
        add(f"nz_7x7_{k}", "nz_7x7", ("colour", 2), ("neighbours", 10), ("prefix", NZ_7X7_PREFIX[k]))
    for axis in ("x", "y"):
        for k in range(3):
            add(f"nz_edge{axis}_{k}", f"nz_edge{axis}", ("colour", 2), ("nz_7x7", 8), ("neighbours", 8),
                ("prefix", NZ_EDGE_PREFIX[k]))
    add("sign", "sign", ("colour", 2), ("region", 3), ("prior", 11))
    return [ModelSpec(i, n, f, lay) for i, (n, f, lay) in enumerate(models)]


@dataclass
class ModelRegistry:
    models: list
    by_name: dict = field(init=False)

    def __post_init__(self):
        self.by_name = {m.name: m for m in self.models}
        if len(self.by_name) != len(self.models):
            raise ValueError("duplicate model names")
        for i, m in enumerate(self.models):
            if m.model_id != i:
                raise ValueError("model ids must be dense and ordered")

    def __len__(self):
        return len(self.models)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.by_name[key]
        return self.models[key]

    def __iter__(self):
        return iter(self.models)

    def id(self, name: str) -> int:
        return self.by_name[name].model_id

    def family(self, family: str) -> list:
        return [m for m in self.models if m.family == family]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([m.bins for m in self.models], dtype=np.int64)

    @property
    def offsets(self) -> np.ndarray:
        """Start of each model in the concatenated global index space (len = models + 1)."""
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)

    @property
    def total_bins(self) -> int:
        return int(self.sizes.sum())

    def select(self, spec: str) -> list:
        """Resolve a comma list of model names or family names."""
        out = []
        for part in (p.strip() for p in spec.split(",") if p.strip()):
            if part in self.by_name:
                out.append(self.by_name[part])
            else:
                fam = self.family(part)
                if not fam:
                    raise KeyError(f"no model or family named {part!r}")
                out.extend(fam)
        return out


DEFAULT_REGISTRY = ModelRegistry(_default_models())

# model id bases used by the coding loops
EXP_7X7 = DEFAULT_REGISTRY.id("exp_7x7_0")
EXP_EDGE = DEFAULT_REGISTRY.id("exp_edge_0")
EXP_DC = DEFAULT_REGISTRY.id("exp_dc_0")
RES_7X7 = DEFAULT_REGISTRY.id("res_7x7_0")
RES_EDGE = DEFAULT_REGISTRY.id("res_edge_0")
RES_DC = DEFAULT_REGISTRY.id("res_dc_0")
RES_THRES = DEFAULT_REGISTRY.id("res_thres_0")
NZ_7X7 = DEFAULT_REGISTRY.id("nz_7x7_0")
NZ_EDGEX = DEFAULT_REGISTRY.id("nz_edgex_0")
NZ_EDGEY = DEFAULT_REGISTRY.id("nz_edgey_0")
SIGN = DEFAULT_REGISTRY.id("sign")
