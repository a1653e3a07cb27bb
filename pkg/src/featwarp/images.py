"""Image conventions: 3 x H x W float tensors in [0, 1], PNG export only.

Images move through the toolchain as .fwt tensors so tests stay free of
codec nondeterminism; PNG files are a one-way export for human inspection.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .tensorio import read_tensor_file, write_tensor_file


def read_image_file(path) -> np.ndarray:
    arr = read_tensor_file(path)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ConfigError(f"image tensor must be CxHxW, got shape {arr.shape}")
    return arr


def write_image_file(path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3:
        raise ConfigError(f"image tensor must be CxHxW, got shape {img.shape}")
    write_tensor_file(path, img)


def export_png(path, array: np.ndarray) -> None:
    """Save a CxHxW or HxW tensor as 8-bit PNG, clipping to [0, 1]."""
    from PIL import Image

    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[0] not in (1, 3):
        raise ConfigError(f"expected HxW, 1xHxW or 3xHxW, got shape {arr.shape}")
    data = np.clip(arr, 0.0, 1.0)
    bytes_img = np.round(data * 255.0).astype(np.uint8).transpose(1, 2, 0)
    if bytes_img.shape[2] == 1:
        bytes_img = bytes_img[:, :, 0]
    Image.fromarray(bytes_img).save(path, format="PNG")
