"""Baseline JPEG ingestion: coefficient extraction, LPCF dumps, rebuild."""
from .image import CoefficientImage, Component, QuantTable, ZIGZAG, RASTER_TO_ZIGZAG
from .lpcf import dump_coefficients, load_coefficients
from .parse import parse_jpeg
from .rebuild import rebuild_jpeg

__all__ = ["CoefficientImage", "Component", "QuantTable", "ZIGZAG", "RASTER_TO_ZIGZAG",
           "parse_jpeg", "dump_coefficients", "load_coefficients", "rebuild_jpeg"]
