"""Lossless coefficient coder: regions, contexts, binarization, range coding."""
from .binarize import Binarized, binarize, debinarize, model_for_exponent_bit
from .context import ContextFields, compute_context, predict_dc
from .regions import Region, classify, count_nonzeros
from .registry import DEFAULT_REGISTRY, IndexLayout, ModelRegistry, ModelSpec, flatten, unflatten

__all__ = ["Binarized", "binarize", "debinarize", "model_for_exponent_bit", "ContextFields",
           "compute_context", "predict_dc", "Region", "classify", "count_nonzeros", "DEFAULT_REGISTRY",
           "IndexLayout", "ModelRegistry", "ModelSpec", "flatten", "unflatten"]
