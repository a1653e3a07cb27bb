"""Geometric loss kernels for splat fine-tuning.

Provides the L1 image loss, a depth-gradient normal estimator, the
normal-consistency loss over ray-splat intersections, and the depth
distortion loss. Both ray losses are normalized by ray count so values are
resolution independent. Perceptual losses are not computed here; callers
register them through :class:`ExternalLoss`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NonFiniteError
from .geometry import Camera, DepthMap
from .tensorio import read_tensor_file, write_tensor_file

DEGENERATE_CROSS = 1e-12


@dataclass(frozen=True)
class RayIntersections:
    """Ragged per-ray lists of (weight, depth, normal) splat intersections.

    Rays are stored flattened: ray ``i`` owns entries
    ``offsets[i] : offsets[i + 1]``. When paired with an H x W grid, ray
    ``i`` corresponds to pixel ``(i // W, i % W)`` in row-major order.
    """

    offsets: np.ndarray
    weights: np.ndarray
    depths: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offsets, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        z = np.asarray(self.depths, dtype=np.float64).reshape(-1)
        n = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if off.ndim != 1 or off.size < 1 or off[0] != 0:
            raise ConfigError("offsets must be 1-D and start at 0")
        if np.any(np.diff(off) < 0) or off[-1] != w.size:
            raise ConfigError("offsets must be non-decreasing and end at the entry count")
        if not (w.size == z.size == n.shape[0]):
            raise ConfigError("weights, depths and normals must have equal length")
        if not np.all(np.isfinite(w)) or (w.size and w.min() < 0):
            raise NonFiniteError("weights must be finite and non-negative")
        if w.size and (not np.all(np.isfinite(z)) or z.min() <= 0):
            raise ConfigError("depths must be finite and positive")
        for arr in (off, w, z, n):
            arr.setflags(write=False)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "depths", z)
        object.__setattr__(self, "normals", n)

    @property
    def num_rays(self) -> int:
        return self.offsets.size - 1

    def ray(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b = self.offsets[i], self.offsets[i + 1]
        return self.weights[a:b], self.depths[a:b], self.normals[a:b]

    @staticmethod
    def from_lists(rays: Sequence[Sequence[tuple]]) -> "RayIntersections":
        """Build from ``[[(weight, depth, normal), ...], ...]``."""
        offsets = [0]
        weights, depths, normals = [], [], []
        for ray in rays:
            for w, z, n in ray:
                weights.append(w)
                depths.append(z)
                normals.append(np.asarray(n, dtype=np.float64))
            offsets.append(len(weights))
        return RayIntersections(
            np.array(offsets),
            np.array(weights, dtype=np.float64),
            np.array(depths, dtype=np.float64),
            np.array(normals, dtype=np.float64).reshape(-1, 3),
        )


def save_rays(rays: RayIntersections, prefix) -> None:
    """Write the documented .fwt triplet: offsets, weights, z-plus-normal table."""
    write_tensor_file(f"{prefix}.offsets.fwt", rays.offsets.astype(np.float32))
    write_tensor_file(f"{prefix}.weights.fwt", rays.weights)
    table = np.concatenate([rays.depths[:, None], rays.normals], axis=1)
    write_tensor_file(f"{prefix}.table.fwt", table)


def load_rays(prefix) -> RayIntersections:
    offsets = read_tensor_file(f"{prefix}.offsets.fwt").astype(np.int64)
    weights = read_tensor_file(f"{prefix}.weights.fwt")
    table = read_tensor_file(f"{prefix}.table.fwt").reshape(-1, 4)
    return RayIntersections(offsets, weights, table[:, 0], table[:, 1:4])


@dataclass(frozen=True)
class NormalMap:
    """H x W unit normals estimated from depth, with a defined-pixel flag grid."""

    data: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        flag = np.asarray(self.defined, dtype=bool)
        if d.ndim != 3 or d.shape[2] != 3 or flag.shape != d.shape[:2]:
            raise ConfigError("normal map must be H x W x 3 with an H x W flag grid")
        if flag.any():
            norms = np.linalg.norm(d[flag], axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-4:
                raise ConfigError("defined normals must be unit length")
        d.setflags(write=False)
        flag.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "defined", flag)


def l1_loss(a, b) -> float:
    """Mean absolute difference over all elements."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def normals_from_depth(depth: DepthMap, cam: Camera) -> NormalMap:
    """Per-pixel normals from unprojected +x / +y tangent vectors.

    Pixels on the bottom or right boundary, or touching a zero-depth
    sentinel, are flagged undefined. Normals point toward the camera
    (fronto-parallel geometry yields (0, 0, -1)).
    """
    intr = cam.intrinsics
    h, w = depth.height, depth.width
    d = depth.data
    ys, xs = np.mgrid[0:h, 0:w]
    px = (xs + 0.5 - intr.cx) / intr.fx * d
    py = (ys + 0.5 - intr.cy) / intr.fy * d
    pts = np.stack([px, py, d], axis=2)

    tx = pts[:, 1:, :] - pts[:, :-1, :]
    ty = pts[1:, :, :] - pts[:-1, :, :]
    cross = -np.cross(tx[:-1, :, :], ty[:, :-1, :])
    norm = np.linalg.norm(cross, axis=2)

    defined = (d[:-1, :-1] > 0) & (d[:-1, 1:] > 0) & (d[1:, :-1] > 0)
    defined &= norm > DEGENERATE_CROSS

    normals = np.zeros((h, w, 3))
    flags = np.zeros((h, w), dtype=bool)
    safe = np.where(defined, norm, 1.0)
    normals[:-1, :-1] = cross / safe[:, :, None]
    flags[:-1, :-1] = defined
    normals[~flags] = 0.0
    return NormalMap(normals, flags)


def normal_consistency_loss(rays: RayIntersections, normals: NormalMap) -> float:
    """Weighted misalignment of intersection normals against the depth normals.

    Sum of ``w * (1 - n . N)`` over the intersections of contributing rays,
    divided by the number of contributing rays. A ray contributes when its
    pixel has a defined N and it has at least one intersection; rays over
    undefined pixels are skipped.
    """
    h, w = normals.defined.shape
    if rays.num_rays != h * w:
        raise DimensionMismatchError(
            f"{rays.num_rays} rays cannot map onto a {h}x{w} normal grid"
        )
    flat_defined = normals.defined.reshape(-1)
    flat_normals = normals.data.reshape(-1, 3)
    counts = np.diff(rays.offsets)
    ray_idx = np.repeat(np.arange(rays.num_rays), counts)
    use = flat_defined[ray_idx]
    if not use.any():
        return 0.0
    n_ref = flat_normals[ray_idx[use]]
    dots = np.sum(rays.normals[use] * n_ref, axis=1)
    total = np.sum(rays.weights[use] * (1.0 - dots))
    contributing = int(np.count_nonzero(flat_defined & (counts > 0)))
    if contributing == 0:
        return 0.0
    return float(total / contributing)


def depth_distortion_loss(rays: RayIntersections) -> float:
    """Pairwise weighted depth spread along each ray, averaged over rays.

    Per ray the double sum over ordered pairs ``w_i w_j |z_i - z_j|``;
    computed here with a sort and prefix sums instead of the O(k^2) pairs.
    """
    n = rays.num_rays
    if n == 0:
        return 0.0
    total = 0.0
    for i in range(n):
        w, z, _ = rays.ray(i)
        if w.size < 2:
            continue
        order = np.argsort(z, kind="stable")
        zs, ws = z[order], w[order]
        prefix_w = np.cumsum(ws)
        prefix_wz = np.cumsum(ws * zs)
        half = np.sum(ws[1:] * (zs[1:] * prefix_w[:-1] - prefix_wz[:-1]))
        total += 2.0 * half
    return float(total / n)


def pair_distortion_grad(
    weight_a: float, depth_a: float, weight_b: float, depth_b: float
) -> tuple[float, float]:
    """Subgradient of one ray's distortion term w.r.t. its two depths.

    For a two-intersection ray the term is ``2 w_a w_b |z_a - z_b|``; away
    from the tie ``z_a = z_b`` the derivative w.r.t. ``z_a`` is
    ``2 w_a w_b sign(z_a - z_b)``.
    """
    s = np.sign(depth_a - depth_b)
    g = 2.0 * weight_a * weight_b * s
    return (float(g), float(-g))


@dataclass(frozen=True)
class ExternalLoss:
    """Callback slot for losses that need models outside this library (LPIPS)."""

    name: str
    weight: float
    fn: Callable[[np.ndarray, np.ndarray], float]

    def __call__(self, a, b) -> float:
        return self.weight * float(self.fn(a, b))
