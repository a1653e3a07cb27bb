"""Scikit-learn style wrappers around the warp and filter operations.

``ViewWarper`` is fitted on the geometry of a view pair and then transforms
feature arrays or attention bundles; ``SplatViewFilter`` is fitted on a view
pair and transforms splat sets. Both expose ``get_params`` / ``set_params``
so they clone and compose like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigError
from .geometry import compute_warp_field
from .maps import AttentionBundle, FeatureMap, Mask
from .splats import FilterConfig, SplatSet, filter_splats
from .validation import as_camera, as_depth_map, as_feature_map, as_splat_set
from .warp import resample_warp_field, warp_bundle, warp_feature_map


def _unpack_pair(X, names: tuple[str, ...]):
    if isinstance(X, dict):
        missing = [n for n in names if n not in X]
        if missing:
            raise ConfigError(f"fit input is missing {missing}")
        return tuple(X[n] for n in names)
    try:
        values = tuple(X)
    except TypeError:
        raise ConfigError(f"fit input must be a dict or a {len(names)}-tuple") from None
    if len(values) != len(names):
        raise ConfigError(f"fit input must provide exactly {names}")
    return values


class ViewWarper(BaseEstimator, TransformerMixin):
    """Warps source-view features into a target view fixed at fit time.

    fit input: ``(target_depth, target_camera, source_camera)`` as a tuple or
    a dict with those keys. transform input: a ``(C, H, W)`` array (any
    resolution; the field is resampled), a :class:`FeatureMap`, or an
    :class:`AttentionBundle`. Output matches the input kind.
    """

    def __init__(self, sampling: str = "bilinear"):
        self.sampling = sampling

    def fit(self, X, y=None):
        depth, tgt_cam, src_cam = _unpack_pair(
            X, ("target_depth", "target_camera", "source_camera")
        )
        self.warp_field_ = compute_warp_field(
            as_depth_map(depth), as_camera(tgt_cam), as_camera(src_cam)
        )
        return self

    def _field_for(self, height: int, width: int):
        return resample_warp_field(self.warp_field_, height, width)

    def transform_with_mask(self, X):
        """Like transform but also returns the sampling validity mask(s)."""
        if not hasattr(self, "warp_field_"):
            raise NotFittedError("ViewWarper must be fitted before transforming")
        if isinstance(X, AttentionBundle):
            return warp_bundle(X, self.warp_field_, self.sampling)
        fmap = as_feature_map(X)
        field = self._field_for(fmap.height, fmap.width)
        warped, mask = warp_feature_map(fmap, field, self.sampling)
        if isinstance(X, FeatureMap):
            return warped, mask
        return warped.data, mask

    def transform(self, X):
        return self.transform_with_mask(X)[0]

    def mask_for(self, height: int, width: int) -> Mask:
        """Sampling validity mask at an arbitrary resolution."""
        if not hasattr(self, "warp_field_"):
            raise NotFittedError("ViewWarper must be fitted before querying masks")
        field = self._field_for(height, width)
        probe = FeatureMap(np.zeros((1, height, width), dtype=np.float32))
        return warp_feature_map(probe, field, self.sampling)[1]


class SplatViewFilter(BaseEstimator, TransformerMixin):
    """Drops splats whose facing normals disagree between two fitted views."""

    def __init__(self, theta_max: float = 60.0):
        self.theta_max = theta_max

    def fit(self, X, y=None):
        src_cam, tgt_cam = _unpack_pair(X, ("source_camera", "target_camera"))
        self.source_camera_ = as_camera(src_cam)
        self.target_camera_ = as_camera(tgt_cam)
        return self

    def transform(self, X):
        if not hasattr(self, "source_camera_"):
            raise NotFittedError("SplatViewFilter must be fitted before transforming")
        splats = as_splat_set(X)
        kept = filter_splats(
            splats, self.source_camera_, self.target_camera_, FilterConfig(self.theta_max)
        )
        if isinstance(X, SplatSet):
            return kept
        return kept.to_table()
