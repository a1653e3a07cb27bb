"""Applying a warp field to multi-channel feature maps and attention bundles.

Sampling uses the index-space coordinates stored in :class:`WarpField`:
``u = i`` addresses the center of source column ``i``. Bilinear is the
default kernel for feature maps; nearest is meant for masks and labels.
Out-of-range bilinear footprints are edge-clamped, and the returned mask
reports which outputs needed no clamping.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionMismatchError
from .geometry import WarpField
from .maps import AttentionBundle, BundleLayer, FeatureMap, Mask

SAMPLINGS = ("nearest", "bilinear")


def resample_warp_field(field: WarpField, new_h: int, new_w: int) -> WarpField:
    """Rescale a warp field to a new grid and source resolution.

    The grid (target side) is resampled with nearest-neighbor, picking the
    original row ``floor(i * H / new_h)`` in exact integer arithmetic, and
    the stored coordinates (source side) are multiplied by
    ``(new_w / src_width, new_h / src_height)`` so they address a source
    image of ``new_w x new_h`` pixels. Validity is resampled with
    nearest-neighbor and never interpolated; after rescaling, coordinates
    on valid pixels may overhang the source bounds by up to half an
    original pixel, which sampling resolves by edge clamping.
    """
    if new_h < 1 or new_w < 1:
        raise ConfigError(f"target size must be >= 1, got {new_h}x{new_w}")
    h, w = field.height, field.width
    if (new_h, new_w) == (h, w) and (field.src_height, field.src_width) == (new_h, new_w):
        return field

    oy = (np.arange(new_h, dtype=np.int64) * h) // new_h
    ox = (np.arange(new_w, dtype=np.int64) * w) // new_w
    grid_y, grid_x = np.meshgrid(oy, ox, indexing="ij")

    u = field.u[grid_y, grid_x] * (new_w / field.src_width)
    v = field.v[grid_y, grid_x] * (new_h / field.src_height)
    valid = field.valid.data[grid_y, grid_x]
    return WarpField(u, v, Mask(valid), new_w, new_h)


def sampling_mask(field: WarpField, sampling: str = "bilinear") -> Mask:
    """Validity of sampling through a field: the field's own mask, restricted
    for bilinear to pixels whose full footprint needs no edge clamping."""
    if sampling not in SAMPLINGS:
        raise ConfigError(f"sampling must be one of {SAMPLINGS}, got {sampling!r}")
    valid = field.valid.data > 0
    if sampling == "bilinear":
        u, v = field.u, field.v
        footprint = (
            (u >= 0)
            & (u <= field.src_width - 1)
            & (v >= 0)
            & (v <= field.src_height - 1)
        )
        valid = valid & footprint
    return Mask(valid.astype(np.float32))


def _sample_nearest(data: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = data.shape[1], data.shape[2]
    ix = np.clip(np.floor(u + 0.5).astype(np.int64), 0, w - 1)
    iy = np.clip(np.floor(v + 0.5).astype(np.int64), 0, h - 1)
    return data[:, iy, ix]


def _sample_bilinear(data: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = data.shape[1], data.shape[2]
    x0 = np.floor(u)
    y0 = np.floor(v)
    fx = u - x0
    fy = v - y0
    x0i = np.clip(x0.astype(np.int64), 0, w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, h - 1)
    x1i = np.clip(x0i + 1, 0, w - 1)
    y1i = np.clip(y0i + 1, 0, h - 1)
    w00 = (1 - fx) * (1 - fy)
    w10 = fx * (1 - fy)
    w01 = (1 - fx) * fy
    w11 = fx * fy
    vals = data.astype(np.float64, copy=False)
    return (
        vals[:, y0i, x0i] * w00
        + vals[:, y0i, x1i] * w10
        + vals[:, y1i, x0i] * w01
        + vals[:, y1i, x1i] * w11
    )


def warp_feature_map(
    src: FeatureMap, field: WarpField, sampling: str = "bilinear"
) -> tuple[FeatureMap, Mask]:
    """Backward-warp a feature map through a field.

    Output pixel ``p`` holds the source sample at ``(u(p), v(p))`` where the
    field is valid and zero elsewhere. The returned mask restricts
    ``field.valid`` to pixels whose sampling needed no edge clamping: the
    full bilinear footprint in bounds, or the rounded coordinate in bounds
    for nearest sampling.
    """
    if sampling not in SAMPLINGS:
        raise ConfigError(f"sampling must be one of {SAMPLINGS}, got {sampling!r}")
    if (src.height, src.width) != (field.src_height, field.src_width):
        raise DimensionMismatchError(
            f"source map is {src.height}x{src.width} but field samples a "
            f"{field.src_height}x{field.src_width} source"
        )
    u, v = field.u, field.v
    valid = field.valid.data > 0

    if sampling == "nearest":
        # the field's bound check already ran on the continuous coordinate,
        # and rounding stays inside those bounds up to edge clamping
        out = _sample_nearest(src.data, u, v).astype(np.float64)
    else:
        out = _sample_bilinear(src.data, u, v)
    mask = sampling_mask(field, sampling)

    out = np.where(valid[None, :, :], out, 0.0).astype(np.float32)
    return FeatureMap(out), mask


def warp_bundle(
    bundle: AttentionBundle, field: WarpField, sampling: str = "bilinear"
) -> tuple[AttentionBundle, dict[int, Mask]]:
    """Warp every layer of a bundle, sharing one resampled field per resolution.

    Returns the warped bundle and one mask per distinct (square) resolution,
    keyed by side length.
    """
    fields: dict[int, WarpField] = {}
    masks: dict[int, Mask] = {}
    layers = []
    for layer in bundle.layers:
        warped: dict[str, FeatureMap | None] = {"self": None, "cross": None}
        for role, fmap in (("self", layer.self_attn), ("cross", layer.cross_attn)):
            if fmap is None:
                continue
            res = fmap.height
            if res not in fields:
                fields[res] = resample_warp_field(field, res, res)
            warped_map, mask = warp_feature_map(fmap, fields[res], sampling)
            warped[role] = warped_map
            if res not in masks:
                masks[res] = mask
        layers.append(BundleLayer(layer.layer_id, warped["self"], warped["cross"]))
    return AttentionBundle(tuple(layers), bundle.resolutions), masks
