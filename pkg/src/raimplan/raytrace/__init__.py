"""Deterministic geometric propagation: LOS tests, specular reflections, CIR."""

from .engine import (
    ChannelImpulseResponse,
    NoCoverageError,
    PropagationPath,
    build_cir,
    los_blocked,
    los_path,
    pack_scene,
    path_loss,
    reflection_paths,
)
from .kernels import active_backend

__all__ = [
    "ChannelImpulseResponse",
    "NoCoverageError",
    "PropagationPath",
    "active_backend",
    "build_cir",
    "los_blocked",
    "los_path",
    "pack_scene",
    "path_loss",
    "reflection_paths",
]
