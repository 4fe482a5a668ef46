"""Lossless JPEG recompression with compact, set-associative probability-model storage."""
from .codec.api import decode_image, encode_image
from .jpeg import parse_jpeg, rebuild_jpeg

__version__ = "0.1.0"

__all__ = ["parse_jpeg", "rebuild_jpeg", "encode_image", "decode_image", "__version__"]
