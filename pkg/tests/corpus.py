"""Deterministic desk-scale photographic JPEG corpus.

No public photo set ships with the sandbox, so the corpus is cut from the
photographs bundled with scikit-image, scikit-learn and matplotlib:
random rotations, flips, downscales and crops, saved as baseline JPEGs
with a spread of qualities, chroma subsampling modes, Huffman
optimisation and restart intervals. The statistical and test splits use
different random streams, so they share source photos but no crop.

    python tests/corpus.py OUTDIR [--stat 200] [--test 200]
"""
from __future__ import annotations

import argparse
import io
from pathlib import Path

import numpy as np
from PIL import Image

CORPUS_VERSION = "1"


def _sources():
    import matplotlib.cbook
    from skimage import data
    from sklearn.datasets import load_sample_image

    left, right, _ = data.stereo_motorcycle()
    with matplotlib.cbook.get_sample_data("grace_hopper.jpg") as fh:
        hopper = np.asarray(Image.open(fh).convert("RGB"))
    return {
        "astronaut": data.astronaut(),
        "coffee": data.coffee(),
        "chelsea": data.chelsea(),
        "rocket": data.rocket(),
        "motorcycle_left": left,
        "motorcycle_right": right,
        "china": load_sample_image("china.jpg"),
        "flower": load_sample_image("flower.jpg"),
        "grace_hopper": hopper,
        "camera": data.camera(),
        "hubble": data.hubble_deep_field(),
        "retina": data.retina(),
    }


def _variant(rng: np.random.Generator, src: np.ndarray) -> tuple[Image.Image, dict]:
    img = Image.fromarray(src)
    img = img.rotate(90 * int(rng.integers(4)), expand=True)
    if rng.random() < 0.5:
        img = img.transpose(Image.Transpose.FLIP_LEFT_RIGHT)
    scale = rng.uniform(0.45, 1.0)
    img = img.resize((max(64, round(img.width * scale)), max(64, round(img.height * scale))),
                     Image.Resampling.LANCZOS)
    w = int(min(img.width, rng.integers(192, 577)))
    h = int(min(img.height, rng.integers(192, 577)))
    x = int(rng.integers(0, img.width - w + 1))
    y = int(rng.integers(0, img.height - h + 1))
    img = img.crop((x, y, x + w, y + h))
    if img.mode == "RGB" and rng.random() < 0.08:
        img = img.convert("L")
    opts = {
        "quality": int(rng.integers(40, 96)),
        "subsampling": int(rng.choice([0, 1, 2], p=[0.25, 0.15, 0.6])),
        "optimize": bool(rng.random() < 0.2),
    }
    if rng.random() < 0.1:
        opts["restart_marker_blocks"] = int(rng.integers(1, 64))
    return img, opts


def generate(out_dir, n_stat: int = 200, n_test: int = 200, seed: int = 2024) -> dict:
    """Write ``stat/`` and ``test/`` JPEG directories under ``out_dir``; returns their paths."""
    out_dir = Path(out_dir)
    stamp = out_dir / f".complete-{CORPUS_VERSION}-{n_stat}-{n_test}-{seed}"
    splits = {"stat": out_dir / "stat", "test": out_dir / "test"}
    if stamp.exists():
        return splits
    sources = _sources()
    names = sorted(sources)
    for k, (split, count) in enumerate((("stat", n_stat), ("test", n_test))):
        rng = np.random.default_rng([seed, k])
        d = splits[split]
        d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            name = names[int(rng.integers(len(names)))]
            img, opts = _variant(rng, sources[name])
            buf = io.BytesIO()
            img.save(buf, "JPEG", **opts)
            (d / f"{split}_{i:04d}_{name}.jpg").write_bytes(buf.getvalue())
    stamp.write_text("ok\n")
    return splits


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--stat", type=int, default=200)
    ap.add_argument("--test", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args(argv)
    for split, path in generate(args.out_dir, args.stat, args.test, args.seed).items():
        print(split, path)


if __name__ == "__main__":
    main()
