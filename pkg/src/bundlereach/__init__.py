"""Reachability of polynomial discrete-time systems with parallelotope bundles."""

from .geometry import Bundle, EmptyBundleError, GeometryError, Parallelotope, volume_estimate
from .models import ModelDef, ModelError, builtin, load_model, parse_model
from .poly import MultiPoly
from .reach import (DivergenceError, Flowpipe, ReachConfig, ReachError, SoundnessError, reach,
                    simulate, transform_bundle)
from .templates import TemplateSet

__all__ = [
    "Bundle", "DivergenceError", "EmptyBundleError", "Flowpipe", "GeometryError", "ModelDef",
    "ModelError", "MultiPoly", "Parallelotope", "ReachConfig", "ReachError", "SoundnessError",
    "TemplateSet", "builtin", "load_model", "parse_model", "reach", "simulate",
    "transform_bundle", "volume_estimate",
]
