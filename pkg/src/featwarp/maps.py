"""Grid-shaped value containers: masks, feature maps, attention bundles.

All containers normalize their payload to float32, validate it once at
construction, and mark the underlying array read-only. They are safe to
share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NonFiniteError
from .tensorio import read_tensor_file, write_tensor_file

DEFAULT_RESOLUTIONS = (32, 64)

BUNDLE_MANIFEST = "manifest.json"
BUNDLE_FORMAT = "featwarp-bundle-v1"


def _frozen_f32(data, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{what} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatchError(f"{what} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains non-finite values")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Mask:
    """H x W validity/weight grid with entries in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_f32(self.data, 2, "mask")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ConfigError("mask entries must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all((self.data == 0.0) | (self.data == 1.0)))

    def coverage(self) -> float:
        """Fraction of total weight, 1.0 when every pixel is fully valid."""
        return float(self.data.mean())

    @staticmethod
    def ones(height: int, width: int) -> "Mask":
        return Mask(np.ones((height, width), dtype=np.float32))


@dataclass(frozen=True)
class FeatureMap:
    """C x H x W stack of finite float32 feature channels."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_f32(self.data, 3, "feature map"))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BundleLayer:
    """One attention layer: a self-attention map and an optional cross map."""

    layer_id: str
    self_attn: FeatureMap
    cross_attn: FeatureMap | None = None


@dataclass(frozen=True)
class AttentionBundle:
    """Ordered per-layer attention maps captured while editing a source view.

    Every map must be square with a side length drawn from ``resolutions``
    (the configured allow-list, 32 and 64 by default).
    """

    layers: tuple[BundleLayer, ...]
    resolutions: tuple[int, ...] = DEFAULT_RESOLUTIONS

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "resolutions", tuple(self.resolutions))
        seen = set()
        for layer in self.layers:
            if layer.layer_id in seen:
                raise ConfigError(f"duplicate layer id {layer.layer_id!r}")
            seen.add(layer.layer_id)
            for role, fmap in (("self", layer.self_attn), ("cross", layer.cross_attn)):
                if fmap is None:
                    continue
                if fmap.height != fmap.width or fmap.height not in self.resolutions:
                    raise ConfigError(
                        f"layer {layer.layer_id!r} {role} map is "
                        f"{fmap.height}x{fmap.width}, allowed sizes {self.resolutions}"
                    )

    def __len__(self) -> int:
        return len(self.layers)

    def distinct_shapes(self) -> list[tuple[int, int]]:
        shapes: list[tuple[int, int]] = []
        for layer in self.layers:
            for fmap in (layer.self_attn, layer.cross_attn):
                if fmap is None:
                    continue
                shape = (fmap.height, fmap.width)
                if shape not in shapes:
                    shapes.append(shape)
        return shapes


def save_bundle(bundle: AttentionBundle, directory) -> None:
    """Write a bundle as a directory of .fwt tensors plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for layer in bundle.layers:
        self_name = f"{layer.layer_id}.self.fwt"
        write_tensor_file(directory / self_name, layer.self_attn.data)
        cross_name = None
        if layer.cross_attn is not None:
            cross_name = f"{layer.layer_id}.cross.fwt"
            write_tensor_file(directory / cross_name, layer.cross_attn.data)
        entries.append(
            {
                "id": layer.layer_id,
                "height": layer.self_attn.height,
                "width": layer.self_attn.width,
                "self": self_name,
                "cross": cross_name,
            }
        )
    manifest = {
        "format": BUNDLE_FORMAT,
        "resolutions": list(bundle.resolutions),
        "layers": entries,
    }
    with open(directory / BUNDLE_MANIFEST, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_bundle(directory) -> AttentionBundle:
    directory = Path(directory)
    manifest_path = directory / BUNDLE_MANIFEST
    if not manifest_path.exists():
        raise ConfigError(f"no {BUNDLE_MANIFEST} in {directory}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    if manifest.get("format") != BUNDLE_FORMAT:
        raise ConfigError(f"unexpected bundle format {manifest.get('format')!r}")
    layers = []
    for entry in manifest["layers"]:
        self_map = FeatureMap(read_tensor_file(directory / entry["self"]))
        cross_map = None
        if entry.get("cross"):
            cross_map = FeatureMap(read_tensor_file(directory / entry["cross"]))
        layers.append(BundleLayer(entry["id"], self_map, cross_map))
    return AttentionBundle(tuple(layers), tuple(manifest["resolutions"]))
