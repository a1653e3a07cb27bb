"""Pinhole camera model and the per-pixel backward warp field between views.

Conventions, fixed once and used by every module:

* Extrinsics are 4x4 world-to-camera rigid transforms, row-major, right-handed,
  with the camera looking down +z. ``world_to_camera(p) = (M @ homog(p))[:3]``.
* Integer pixel ``(i, j)`` samples the continuous image coordinate
  ``(i + 0.5, j + 0.5)``. Unprojection and the out-of-bounds test operate on
  continuous coordinates.
* A :class:`WarpField` stores backward-warp coordinates in index space: the
  value ``u = i`` points exactly at the center of source column ``i``. Under
  identical source and target cameras the field is the identity grid.
* Depth value 0 is the "no geometry" sentinel and always maps to invalid.
  Pixels whose depth is non-positive or whose reprojected z is non-positive
  carry the coordinate sentinel -1 in ``u`` and ``v``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    InvalidSampleError,
    NonFiniteError,
    ProjectionSingularityError,
)
from .maps import Mask

ROTATION_TOL = 1e-6

CAMERA_JSON_FIELDS = ("fx", "fy", "cx", "cy", "width", "height", "world_to_camera")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ConfigError("width and height must be integers")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be >= 1")
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")


@dataclass(frozen=True)
class CameraExtrinsics:
    """4x4 world-to-camera rigid transform."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ConfigError(f"extrinsics must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonFiniteError("extrinsics contain non-finite values")
        r = m[:3, :3]
        if np.max(np.abs(r.T @ r - np.eye(3))) > ROTATION_TOL:
            raise ConfigError("upper-left 3x3 block is not a rotation (R^T R != I)")
        if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
            raise ConfigError("rotation determinant must be +1")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > 0:
            raise ConfigError("last extrinsics row must be (0, 0, 0, 1)")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def identity() -> "CameraExtrinsics":
        return CameraExtrinsics(np.eye(4))

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def inverse_matrix(self) -> np.ndarray:
        """Analytic rigid inverse: [R^T, -R^T t]. Camera-to-world transform."""
        r = self.rotation
        t = self.translation
        inv = np.eye(4)
        inv[:3, :3] = r.T
        inv[:3, 3] = -r.T @ t
        return inv


@dataclass(frozen=True)
class Camera:
    intrinsics: CameraIntrinsics
    extrinsics: CameraExtrinsics

    @property
    def width(self) -> int:
        return self.intrinsics.width

    @property
    def height(self) -> int:
        return self.intrinsics.height


@dataclass(frozen=True)
class DepthMap:
    """H x W metric depth along the camera +z axis. 0 marks "no geometry"."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ConfigError(f"depth map must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("depth map contains non-finite values")
        if arr.min() < 0:
            raise ConfigError("depth values must be non-negative")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WarpField:
    """Backward warp: per target pixel, the source-image coordinate to sample.

    ``u`` and ``v`` are in index space (see module docstring). ``valid`` is 1
    exactly where the target depth is positive, the reprojected z is positive,
    and the continuous source coordinate lands inside
    ``[0, src_width) x [0, src_height)``.
    """

    u: np.ndarray
    v: np.ndarray
    valid: Mask
    src_width: int
    src_height: int

    def __post_init__(self):
        u = np.ascontiguousarray(np.asarray(self.u, dtype=np.float64))
        v = np.ascontiguousarray(np.asarray(self.v, dtype=np.float64))
        if u.ndim != 2 or u.shape != v.shape:
            raise ConfigError("u and v must be 2-D arrays of the same shape")
        if u.shape != (self.valid.height, self.valid.width):
            raise ConfigError("validity mask shape must match the field grid")
        if self.src_width < 1 or self.src_height < 1:
            raise ConfigError("source dimensions must be >= 1")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def unproject(pix, depth: float, intr: CameraIntrinsics) -> np.ndarray:
    """Lift a continuous pixel coordinate to a camera-frame 3D point."""
    if not depth > 0:
        raise InvalidSampleError(f"depth must be positive, got {depth}")
    x, y = float(pix[0]), float(pix[1])
    return np.array(
        [(x - intr.cx) / intr.fx * depth, (y - intr.cy) / intr.fy * depth, depth]
    )


def project(point, intr: CameraIntrinsics) -> tuple[float, float, float]:
    """Project a camera-frame point to a continuous pixel coordinate plus depth.

    Returns ``(u, v, z)``; a non-positive ``z`` means the point lies behind
    the camera and the coordinate is not usable for sampling.
    """
    x, y, z = (float(c) for c in point)
    if z == 0.0:
        raise ProjectionSingularityError("cannot project a point with z = 0")
    return (intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy, z)


def camera_to_world(point, extr: CameraExtrinsics) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64)
    inv = extr.inverse_matrix()
    return inv[:3, :3] @ p + inv[:3, 3]


def world_to_camera(point, extr: CameraExtrinsics) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64)
    return extr.rotation @ p + extr.translation


def relative_transform(tgt_cam: Camera, src_cam: Camera) -> np.ndarray:
    """4x4 transform taking target-camera coordinates to source-camera ones."""
    return src_cam.extrinsics.matrix @ tgt_cam.extrinsics.inverse_matrix()


def compute_warp_field(
    tgt_depth: DepthMap, tgt_cam: Camera, src_cam: Camera
) -> WarpField:
    """Backward warp field from Eq.-style unproject / transform / reproject.

    For every target pixel with positive depth: unproject its continuous
    center with the target intrinsics, move it through target-to-world and
    world-to-source rigid transforms, project with the source intrinsics, and
    record the source coordinate in index space. Validity combines the
    positive-depth, positive-reprojected-z and in-bounds conditions.
    """
    hi = tgt_cam.intrinsics
    if (tgt_depth.height, tgt_depth.width) != (hi.height, hi.width):
        raise ConfigError(
            f"depth map is {tgt_depth.height}x{tgt_depth.width} but target camera "
            f"expects {hi.height}x{hi.width}"
        )
    si = src_cam.intrinsics
    h, w = tgt_depth.height, tgt_depth.width
    d = tgt_depth.data
    positive = d > 0

    ys, xs = np.mgrid[0:h, 0:w]
    xc = xs + 0.5
    yc = ys + 0.5
    px = (xc - hi.cx) / hi.fx * d
    py = (yc - hi.cy) / hi.fy * d

    m = relative_transform(tgt_cam, src_cam)
    r, t = m[:3, :3], m[:3, 3]
    sx = r[0, 0] * px + r[0, 1] * py + r[0, 2] * d + t[0]
    sy = r[1, 0] * px + r[1, 1] * py + r[1, 2] * d + t[1]
    sz = r[2, 0] * px + r[2, 1] * py + r[2, 2] * d + t[2]

    computable = positive & (sz > 0)
    safe_z = np.where(computable, sz, 1.0)
    u_cont = si.fx * sx / safe_z + si.cx
    v_cont = si.fy * sy / safe_z + si.cy

    in_bounds = (u_cont >= 0) & (u_cont < si.width) & (v_cont >= 0) & (v_cont < si.height)
    valid = computable & in_bounds

    u = np.where(computable, u_cont - 0.5, -1.0)
    v = np.where(computable, v_cont - 0.5, -1.0)
    return WarpField(u, v, Mask(valid.astype(np.float32)), si.width, si.height)


def camera_to_json_dict(cam: Camera) -> dict:
    i = cam.intrinsics
    return {
        "fx": i.fx,
        "fy": i.fy,
        "cx": i.cx,
        "cy": i.cy,
        "width": i.width,
        "height": i.height,
        "world_to_camera": [float(x) for x in cam.extrinsics.matrix.reshape(-1)],
    }


def camera_from_json_dict(d: dict) -> Camera:
    unknown = set(d) - set(CAMERA_JSON_FIELDS)
    if unknown:
        raise ConfigError(f"unknown camera fields: {sorted(unknown)}")
    missing = set(CAMERA_JSON_FIELDS) - set(d)
    if missing:
        raise ConfigError(f"missing camera fields: {sorted(missing)}")
    m = d["world_to_camera"]
    if not isinstance(m, list) or len(m) != 16:
        raise ConfigError("world_to_camera must be a list of 16 numbers, row-major")
    intr = CameraIntrinsics(
        fx=float(d["fx"]),
        fy=float(d["fy"]),
        cx=float(d["cx"]),
        cy=float(d["cy"]),
        width=d["width"],
        height=d["height"],
    )
    extr = CameraExtrinsics(np.array(m, dtype=np.float64).reshape(4, 4))
    return Camera(intr, extr)


def save_camera(path, cam: Camera) -> None:
    with open(path, "w") as f:
        json.dump(camera_to_json_dict(cam), f, indent=2, sort_keys=True)
        f.write("\n")


def load_camera(path) -> Camera:
    path = Path(path)
    try:
        with open(path) as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"camera file {path} is not valid JSON: {e}") from e
    return camera_from_json_dict(d)
