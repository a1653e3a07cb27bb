"""Gaussian-disk splats: view-facing normals, angle filtering, depth rendering.

Splats are oriented disks (position, unit normal, two semi-axes, opacity).
Before warping between a view pair, splats whose view-facing normals disagree
by more than ``theta_max`` are dropped, and depth for the warp is rendered
from the survivors with a plain z-buffer over hard circular footprints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError
from .geometry import Camera, DepthMap

NORMAL_TOL = 1e-6
MIN_RENDER_OPACITY = 0.05

# column order of the on-disk N x 9 splat table
TABLE_COLUMNS = ("px", "py", "pz", "nx", "ny", "nz", "sx", "sy", "opacity")


@dataclass(frozen=True)
class Splat:
    position: np.ndarray
    normal: np.ndarray
    scale: np.ndarray
    opacity: float


@dataclass(frozen=True)
class SplatSet:
    """Column-wise storage of N splats."""

    positions: np.ndarray
    normals: np.ndarray
    scales: np.ndarray
    opacities: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        nrm = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        scl = np.asarray(self.scales, dtype=np.float64).reshape(-1, 2)
        opa = np.asarray(self.opacities, dtype=np.float64).reshape(-1)
        n = pos.shape[0]
        if not (nrm.shape[0] == scl.shape[0] == opa.shape[0] == n):
            raise ConfigError("splat columns must all have the same length")
        for arr, what in ((pos, "positions"), (nrm, "normals"), (scl, "scales"), (opa, "opacities")):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteError(f"splat {what} contain non-finite values")
        if n:
            norms = np.linalg.norm(nrm, axis=1)
            if np.max(np.abs(norms - 1.0)) > NORMAL_TOL:
                raise ConfigError("splat normals must be unit length")
            if scl.min() <= 0:
                raise ConfigError("splat scales must be positive")
            if opa.min() < 0 or opa.max() > 1:
                raise ConfigError("splat opacities must lie in [0, 1]")
        for arr in (pos, nrm, scl, opa):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "scales", scl)
        object.__setattr__(self, "opacities", opa)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, i: int) -> Splat:
        return Splat(self.positions[i], self.normals[i], self.scales[i], float(self.opacities[i]))

    def take(self, indices) -> "SplatSet":
        idx = np.asarray(indices, dtype=np.int64)
        return SplatSet(
            self.positions[idx], self.normals[idx], self.scales[idx], self.opacities[idx]
        )

    def to_table(self) -> np.ndarray:
        """N x 9 float array in the documented column order."""
        return np.concatenate(
            [self.positions, self.normals, self.scales, self.opacities[:, None]], axis=1
        )

    @staticmethod
    def from_table(table: np.ndarray) -> "SplatSet":
        t = np.asarray(table, dtype=np.float64)
        if t.ndim != 2 or t.shape[1] != 9:
            raise ConfigError(f"splat table must be N x 9, got {t.shape}")
        return SplatSet(t[:, 0:3], t[:, 3:6], t[:, 6:8], t[:, 8])


@dataclass(frozen=True)
class FilterConfig:
    theta_max: float = 60.0

    def __post_init__(self):
        if not (0.0 < self.theta_max <= 180.0):
            raise ConfigError(f"theta_max must lie in (0, 180], got {self.theta_max}")


def _view_normals(splats: SplatSet, cam: Camera) -> np.ndarray:
    """World normals rotated into the camera frame and flipped to face it."""
    r = cam.extrinsics.rotation
    t = cam.extrinsics.translation
    n_view = splats.normals @ r.T
    p_cam = splats.positions @ r.T + t
    away = np.sum(n_view * p_cam, axis=1) > 0
    n_view = np.where(away[:, None], -n_view, n_view)
    return n_view


def view_normal(splat: Splat, cam: Camera) -> np.ndarray:
    """Camera-frame unit normal of one splat, flipped toward the camera."""
    single = SplatSet(
        splat.position[None], splat.normal[None], splat.scale[None], np.array([splat.opacity])
    )
    return _view_normals(single, cam)[0]


def filter_splats(
    splats: SplatSet, src_cam: Camera, tgt_cam: Camera, cfg: FilterConfig = FilterConfig()
) -> SplatSet:
    """Drop splats whose view-facing normals differ by more than theta_max.

    A splat is kept iff the dot product of its source-view and target-view
    facing normals is at least cos(theta_max). An empty result is legal and
    renders to an all-zero depth map downstream.
    """
    if len(splats) == 0:
        return splats
    n_src = _view_normals(splats, src_cam)
    n_tgt = _view_normals(splats, tgt_cam)
    dots = np.sum(n_src * n_tgt, axis=1)
    keep = dots >= math.cos(math.radians(cfg.theta_max))
    return splats.take(np.nonzero(keep)[0])


def render_depth(splats: SplatSet, cam: Camera) -> DepthMap:
    """Z-buffer depth render over hard circular splat footprints.

    Each splat in front of the camera projects to a filled circle of radius
    ``(fx + fy) / 2 * max(scale) / depth`` pixels around its projected
    center and writes its center depth to every covered pixel that is not
    already nearer. Uncovered pixels hold the 0 sentinel. Splats behind the
    camera or with opacity below 0.05 are skipped.
    """
    intr = cam.intrinsics
    h, w = intr.height, intr.width
    buf = np.full((h, w), np.inf)
    if len(splats):
        r = cam.extrinsics.rotation
        t = cam.extrinsics.translation
        p_cam = splats.positions @ r.T + t
        z = p_cam[:, 2]
        f_mean = 0.5 * (intr.fx + intr.fy)
        radii = f_mean * splats.scales.max(axis=1) / np.where(z > 0, z, 1.0)
        ok = (z > 0) & (splats.opacities >= MIN_RENDER_OPACITY)
        u = intr.fx * p_cam[:, 0] / np.where(z > 0, z, 1.0) + intr.cx
        v = intr.fy * p_cam[:, 1] / np.where(z > 0, z, 1.0) + intr.cy
        for i in np.nonzero(ok)[0]:
            _splat_min(buf, u[i], v[i], radii[i], z[i])
    out = np.where(np.isinf(buf), 0.0, buf)
    return DepthMap(out)


def _splat_min(buf: np.ndarray, uc: float, vc: float, radius: float, depth: float) -> None:
    h, w = buf.shape
    # pixel (i, j) is covered when its center (i+0.5, j+0.5) lies in the circle
    x0 = max(int(math.floor(uc - radius - 0.5)), 0)
    x1 = min(int(math.ceil(uc + radius - 0.5)), w - 1)
    y0 = max(int(math.floor(vc - radius - 0.5)), 0)
    y1 = min(int(math.ceil(vc + radius - 0.5)), h - 1)
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1) + 0.5
    ys = np.arange(y0, y1 + 1) + 0.5
    dx = xs[None, :] - uc
    dy = ys[:, None] - vc
    covered = dx * dx + dy * dy <= radius * radius
    region = buf[y0 : y1 + 1, x0 : x1 + 1]
    region[covered] = np.minimum(region[covered], depth)
