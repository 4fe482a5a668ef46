"""Per-image access profiles of a JPEG corpus."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..codec.api import access_sets
from ..codec.registry import DEFAULT_REGISTRY, ModelRegistry
from ..errors import EmptyCorpus, LeptonStoreError
from ..jpeg.parse import parse_jpeg
from ..store.histogram import AccessHistogram

log = logging.getLogger(__name__)

JPEG_SUFFIXES = {".jpg", ".jpeg", ".jpe", ".jfif"}


@dataclass
class CorpusProfile:
    """Distinct flat indexes each image touched, per model (unbounded encode)."""
    registry: ModelRegistry = DEFAULT_REGISTRY
    names: list = field(default_factory=list)
    images: list = field(default_factory=list)     # one {model name: sorted int64 array} per image
    skipped: list = field(default_factory=list)    # (path, reason)

    def __len__(self):
        return len(self.images)

    def add(self, name: str, accessed: dict):
        self.names.append(name)
        self.images.append(accessed)

    def histogram(self) -> AccessHistogram:
        h = AccessHistogram(self.registry)
        for acc in self.images:
            h.add_image(acc)
        return h

    def model_sets(self, model: str) -> list:
        empty = np.zeros(0, dtype=np.int64)
        return [acc.get(model, empty) for acc in self.images]

    def merge(self, other: CorpusProfile) -> CorpusProfile:
        return CorpusProfile(self.registry, self.names + other.names, self.images + other.images,
                             self.skipped + other.skipped)


def list_jpegs(directory) -> list[Path]:
    d = Path(directory)
    if d.is_file():
        return [d]
    if not d.is_dir():
        raise FileNotFoundError(f"no such corpus directory: {d}")
    return sorted(p for p in d.rglob("*") if p.is_file() and p.suffix.lower() in JPEG_SUFFIXES)


def _profile_one(path):
    try:
        img = parse_jpeg(Path(path).read_bytes())
        return str(path), access_sets(img), None
    except LeptonStoreError as exc:
        return str(path), None, f"{type(exc).__name__}: {exc}"


def profile_paths(paths, jobs: int = 1, registry: ModelRegistry = DEFAULT_REGISTRY) -> CorpusProfile:
    """Profile every JPEG; undecodable files are recorded in ``skipped``."""
    paths = [str(p) for p in paths]
    prof = CorpusProfile(registry)
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_profile_one, paths, chunksize=4))
    else:
        results = [_profile_one(p) for p in paths]
    for path, acc, err in results:
        if err is not None:
            log.warning("skipping %s (%s)", path, err)
            prof.skipped.append((path, err))
        else:
            prof.add(path, acc)
    return prof


def profile_corpus(directory, jobs: int = 1, registry: ModelRegistry = DEFAULT_REGISTRY) -> CorpusProfile:
    prof = profile_paths(list_jpegs(directory), jobs, registry)
    if not len(prof):
        raise EmptyCorpus(f"no decodable baseline JPEG under {directory}")
    return prof
