"""Small builders for synthetic JPEGs and coefficient images."""
from __future__ import annotations

import io

import numpy as np
from PIL import Image

from leptonstore.jpeg import CoefficientImage, Component, QuantTable


def jpeg_bytes(array, **opts) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(buf, "JPEG", **opts)
    return buf.getvalue()


def flat_gray(size=16, value=128) -> bytes:
    return jpeg_bytes(np.full((size, size), value, np.uint8), quality=90)


def coefficient_image(blocks_per_component, quant=None, ids=(1, 2, 3)) -> CoefficientImage:
    """Image from a list of (hb, wb, 64) raster arrays; 1x1 sampling everywhere."""
    comps = []
    for k, blocks in enumerate(blocks_per_component):
        blocks = np.asarray(blocks, dtype=np.int16)
        comps.append(Component(ids[k], 1, 1, 0 if k == 0 else 1, blocks))
    q = np.ones(64, np.uint16) if quant is None else quant
    tables = {0: QuantTable(0, q), 1: QuantTable(1, q)}
    hb, wb = comps[0].blocks.shape[:2]
    return CoefficientImage(wb * 8, hb * 8, comps, tables, b"")


def random_blocks(rng, hb, wb, scale=6.0, density=0.35, dc_scale=200):
    """Laplacian-ish coefficients decaying away from DC, within the codable range."""
    blocks = np.zeros((hb, wb, 64), np.int64)
    r, c = np.divmod(np.arange(64), 8)
    decay = scale / (1.0 + r + c)
    mags = rng.geometric(1.0 / (1.0 + decay), size=(hb, wb, 64)) - 1
    mask = rng.random((hb, wb, 64)) < density
    signs = rng.choice([-1, 1], size=(hb, wb, 64))
    blocks = mags * mask * signs
    blocks[..., 0] = rng.integers(-dc_scale, dc_scale + 1, size=(hb, wb))
    return np.clip(blocks, -2047, 2047).astype(np.int16)
