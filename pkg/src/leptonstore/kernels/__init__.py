"""Hot-loop kernels with a compiled (Cython) and a pure-Python backend.

The compiled extension ``leptonstore.kernels._core`` is used when it was
built; otherwise the pure-Python twins are used. Set
``LEPTONSTORE_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import importlib
import os
from types import SimpleNamespace


def _python_backend():
    from ..codec import coder
    from ..jpeg import huffman
    return SimpleNamespace(
        name="python",
        decode_segment=huffman.decode_segment,
        encode_blocks=coder.encode_blocks,
        decode_blocks=coder.decode_blocks,
    )


def _cython_backend():
    core = importlib.import_module(f"{__name__}._core")
    from ..codec import registry
    from ..codec.coder import NZ_NEIGHBOUR_BUCKET
    from ..codec.regions import ORDER_7X7
    core._install_orders([int(p) for p in ORDER_7X7], NZ_NEIGHBOUR_BUCKET)
    core._install_models([registry.EXP_7X7, registry.EXP_EDGE, registry.EXP_DC, registry.RES_7X7,
                          registry.RES_EDGE, registry.RES_DC, registry.RES_THRES, registry.NZ_7X7,
                          registry.NZ_EDGEX, registry.NZ_EDGEY, registry.SIGN])
    return SimpleNamespace(
        name="cython",
        decode_segment=core.decode_segment,
        encode_blocks=core.encode_blocks,
        decode_blocks=core.decode_blocks,
    )


def compiled_available() -> bool:
    try:
        importlib.import_module(f"{__name__}._core")
    except ImportError:
        return False
    return True


def get_backend(name: str | None = None):
    """Return the backend namespace for ``name`` ('cython', 'python' or None=auto)."""
    if name is None:
        name = os.environ.get("LEPTONSTORE_BACKEND", "auto")
    if name == "python":
        return _python_backend()
    if name == "cython":
        return _cython_backend()
    if name != "auto":
        raise ValueError(f"unknown backend {name!r}")
    return _cython_backend() if compiled_available() else _python_backend()


_active = None


def active():
    global _active
    if _active is None:
        _active = get_backend()
    return _active


def use(name: str | None):
    """Switch the process-wide backend (tests and benchmarks)."""
    global _active
    _active = get_backend(name)
    return _active


def decode_segment(*args):
    return active().decode_segment(*args)


def encode_blocks(*args, **kwargs):
    return active().encode_blocks(*args, **kwargs)


def decode_blocks(*args, **kwargs):
    return active().decode_blocks(*args, **kwargs)
