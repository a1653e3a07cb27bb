"""Boundary coercion helpers shared by the estimators, CLI and bindings.

Each helper accepts the library type, a plain array, or (for cameras) a
JSON-style dict and returns the canonical library type, raising the
library's error variants on contract violations.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NonFiniteError
from .geometry import Camera, DepthMap, camera_from_json_dict
from .maps import FeatureMap, Mask
from .splats import SplatSet


def as_feature_map(x) -> FeatureMap:
    if isinstance(x, FeatureMap):
        return x
    arr = np.asarray(x)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise DimensionMismatchError(f"expected CxHxW or HxW array, got shape {arr.shape}")
    return FeatureMap(arr)


def as_depth_map(x) -> DepthMap:
    if isinstance(x, DepthMap):
        return x
    return DepthMap(np.asarray(x))


def as_camera(x) -> Camera:
    if isinstance(x, Camera):
        return x
    if isinstance(x, dict):
        return camera_from_json_dict(x)
    raise ConfigError(f"cannot interpret {type(x).__name__} as a camera")


def as_mask(x) -> Mask:
    if isinstance(x, Mask):
        return x
    return Mask(np.asarray(x))


def as_splat_set(x) -> SplatSet:
    if isinstance(x, SplatSet):
        return x
    arr = np.asarray(x)
    return SplatSet.from_table(arr)


def check_finite(arr, what: str) -> np.ndarray:
    a = np.asarray(arr)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return a
