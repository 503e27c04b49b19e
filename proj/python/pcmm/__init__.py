"""Hybrid parametric point-cloud models (Gaussians, bounded planes, B-spline surfaces)."""

from ._pcmm import (
    Config,
    Error,
    Model,
    ParseError,
    evaluate,
    fit,
    load_model,
    read_cloud,
    resample,
    rmse,
    save_model,
    voxel_filter,
    write_cloud,
)

__all__ = [
    "Config",
    "Error",
    "Model",
    "ParseError",
    "evaluate",
    "fit",
    "load_model",
    "read_cloud",
    "resample",
    "rmse",
    "save_model",
    "voxel_filter",
    "write_cloud",
]
