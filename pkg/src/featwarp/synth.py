"""Synthetic scenes with analytic depth, used as the test and demo substrate.

A scene is a plane or a sphere observed by a camera rig. For every camera
the generator writes the analytic depth map, the camera JSON, and a shared
splat table sampling the surface, so every downstream module can be
exercised end to end without any captured data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import Camera, CameraExtrinsics, CameraIntrinsics, save_camera
from .splats import SplatSet
from .tensorio import write_tensor_file

SCENE_MANIFEST = "scene_manifest.json"


@dataclass(frozen=True)
class PlaneGeometry:
    """Plane through (0, 0, z), tilted about the world y-axis."""

    z: float
    tilt_deg: float = 0.0

    @property
    def point(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.z])

    @property
    def normal(self) -> np.ndarray:
        t = math.radians(self.tilt_deg)
        # untilted plane faces -z toward a camera at the origin
        return np.array([math.sin(t), 0.0, -math.cos(t)])


@dataclass(frozen=True)
class SphereGeometry:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("sphere radius must be positive")


def _camera_rays(cam: Camera) -> tuple[np.ndarray, np.ndarray]:
    """World-space camera center and per-pixel ray directions with unit z_cam."""
    intr = cam.intrinsics
    inv = cam.extrinsics.inverse_matrix()
    center = inv[:3, 3]
    ys, xs = np.mgrid[0 : intr.height, 0 : intr.width]
    d_cam = np.stack(
        [
            (xs + 0.5 - intr.cx) / intr.fx,
            (ys + 0.5 - intr.cy) / intr.fy,
            np.ones_like(xs, dtype=np.float64),
        ],
        axis=2,
    )
    d_world = d_cam @ inv[:3, :3].T
    return center, d_world


def plane_depth(geom: PlaneGeometry, cam: Camera) -> np.ndarray:
    """Analytic depth of the plane along each camera ray; 0 where missed."""
    center, dirs = _camera_rays(cam)
    n = geom.normal
    denom = dirs @ n
    num = float(n @ (geom.point - center))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = num / denom
    depth = np.where((np.abs(denom) > 1e-12) & (s > 0), s, 0.0)
    return depth


def sphere_depth(geom: SphereGeometry, cam: Camera) -> np.ndarray:
    """Analytic depth of the nearest sphere intersection; 0 where missed."""
    center, dirs = _camera_rays(cam)
    oc = center - np.asarray(geom.center, dtype=np.float64)
    a = np.sum(dirs * dirs, axis=2)
    b = 2.0 * (dirs @ oc)
    c = float(oc @ oc) - geom.radius**2
    disc = b * b - 4 * a * c
    hit = disc >= 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    s_near = (-b - sq) / (2 * a)
    s_far = (-b + sq) / (2 * a)
    s = np.where(s_near > 0, s_near, s_far)
    return np.where(hit & (s > 0), s, 0.0)


def analytic_depth(geometry, cam: Camera) -> np.ndarray:
    if isinstance(geometry, PlaneGeometry):
        return plane_depth(geometry, cam)
    if isinstance(geometry, SphereGeometry):
        return sphere_depth(geometry, cam)
    raise ConfigError(f"unsupported geometry {type(geometry).__name__}")


def surface_color(points: np.ndarray) -> np.ndarray:
    """Smooth deterministic RGB texture attached to world positions."""
    p = np.asarray(points, dtype=np.float64)
    r = 0.5 + 0.35 * np.sin(3.1 * p[..., 0] + 1.7 * p[..., 2])
    g = 0.5 + 0.35 * np.sin(2.3 * p[..., 1] - 0.9 * p[..., 0] + 1.0)
    b = 0.5 + 0.35 * np.sin(1.9 * p[..., 2] + 2.9 * p[..., 1] + 2.0)
    return np.stack([r, g, b], axis=0)


def render_analytic_image(geometry, cam: Camera) -> np.ndarray:
    """Reference texture image: surface color where the geometry is hit."""
    depth = analytic_depth(geometry, cam)
    center, dirs = _camera_rays(cam)
    pts = center + dirs * depth[:, :, None]
    img = surface_color(pts)
    return np.where(depth[None, :, :] > 0, img, 0.0).astype(np.float32)


def plane_splats(geom: PlaneGeometry, cameras: list[Camera], grid: int = 96) -> SplatSet:
    """Sample the plane over the union of camera footprints with a regular grid."""
    n = geom.normal
    # in-plane basis
    e1 = np.cross(n, np.array([0.0, 1.0, 0.0]))
    if np.linalg.norm(e1) < 1e-9:
        e1 = np.cross(n, np.array([1.0, 0.0, 0.0]))
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    e2 /= np.linalg.norm(e2)

    coords = []
    for cam in cameras:
        intr = cam.intrinsics
        center, dirs = _camera_rays(cam)
        for iy in (0, intr.height - 1):
            for ix in (0, intr.width - 1):
                d = dirs[iy, ix]
                denom = float(n @ d)
                if abs(denom) < 1e-12:
                    continue
                s = float(n @ (geom.point - center)) / denom
                if s <= 0:
                    continue
                hit = center + s * d
                rel = hit - geom.point
                coords.append((float(rel @ e1), float(rel @ e2)))
    if not coords:
        raise ConfigError("no camera sees the plane")
    arr = np.array(coords)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    pad = 0.1 * (hi - lo + 1e-9)
    lo -= pad
    hi += pad
    us = np.linspace(lo[0], hi[0], grid)
    vs = np.linspace(lo[1], hi[1], grid)
    spacing = max((hi[0] - lo[0]) / (grid - 1), (hi[1] - lo[1]) / (grid - 1))
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    pos = geom.point + uu[..., None] * e1 + vv[..., None] * e2
    pos = pos.reshape(-1, 3)
    count = pos.shape[0]
    normals = np.tile(n, (count, 1))
    scales = np.full((count, 2), spacing)
    opacities = np.ones(count)
    return SplatSet(pos, normals, scales, opacities)


def sphere_splats(
    geom: SphereGeometry,
    count: int = 20000,
    cap_axis=None,
    cap_deg: float = 180.0,
) -> SplatSet:
    """Near-uniform Fibonacci sampling of the sphere surface.

    With ``cap_axis`` the samples are restricted to the spherical cap of
    half-angle ``cap_deg`` around that axis, concentrating the budget on
    the side a camera rig actually sees.
    """
    i = np.arange(count)
    golden = (1 + math.sqrt(5)) / 2
    theta = 2 * math.pi * i / golden
    z_min = math.cos(math.radians(cap_deg)) if cap_axis is not None else -1.0
    zed = 1 - (1 - z_min) * (i + 0.5) / count
    rho = np.sqrt(np.maximum(1 - zed * zed, 0.0))
    dirs = np.stack([rho * np.cos(theta), rho * np.sin(theta), zed], axis=1)
    if cap_axis is not None:
        axis = np.asarray(cap_axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        # rotate +z onto the cap axis
        if axis[2] <= -1.0 + 1e-12:
            rot = np.diag([1.0, -1.0, -1.0])
        elif axis[2] < 1.0 - 1e-12:
            v = np.cross([0.0, 0.0, 1.0], axis)
            s = np.linalg.norm(v)
            c = axis[2]
            vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
            rot = np.eye(3) + vx + vx @ vx * ((1 - c) / (s * s))
        else:
            rot = np.eye(3)
        dirs = dirs @ rot.T
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = dirs / norms
    pos = np.asarray(geom.center) + geom.radius * dirs
    area = 2 * math.pi * (1 - z_min) * geom.radius**2
    spacing = math.sqrt(area / count) * 1.2
    scales = np.full((count, 2), spacing)
    return SplatSet(pos, dirs, scales, np.ones(count))


def arc_cameras(
    count: int,
    arc_deg: float,
    distance: float,
    look_at,
    intr: CameraIntrinsics,
) -> list[Camera]:
    """Cameras on a horizontal arc of total span ``arc_deg`` around a point.

    All cameras look at ``look_at`` from ``distance`` away; a single camera
    sits at the arc center.
    """
    look = np.asarray(look_at, dtype=np.float64)
    if count == 1:
        angles = [0.0]
    else:
        angles = np.linspace(-arc_deg / 2, arc_deg / 2, count)
    cams = []
    for phi_deg in angles:
        phi = math.radians(phi_deg)
        z_axis = np.array([math.sin(phi), 0.0, math.cos(phi)])
        position = look - distance * z_axis
        y_axis = np.array([0.0, 1.0, 0.0])
        x_axis = np.cross(y_axis, z_axis)
        r = np.stack([x_axis, y_axis, z_axis], axis=0)
        m = np.eye(4)
        m[:3, :3] = r
        m[:3, 3] = -r @ position
        cams.append(Camera(intr, CameraExtrinsics(m)))
    return cams


def _geometry_from_spec(spec: dict):
    g = spec.get("geometry")
    if not isinstance(g, dict) or "type" not in g:
        raise ConfigError("scene spec needs a geometry object with a type")
    if g["type"] == "plane":
        return PlaneGeometry(z=float(g["z"]), tilt_deg=float(g.get("tilt_deg", 0.0)))
    if g["type"] == "sphere":
        return SphereGeometry(center=tuple(g["center"]), radius=float(g["radius"]))
    raise ConfigError(f"unknown geometry type {g['type']!r}")


def _cameras_from_spec(spec: dict) -> list[Camera]:
    from .geometry import camera_from_json_dict

    if "cameras" in spec:
        return [camera_from_json_dict(c) for c in spec["cameras"]]
    if "rig" in spec:
        rig = spec["rig"]
        if rig.get("type") != "arc":
            raise ConfigError(f"unknown rig type {rig.get('type')!r}")
        intr = CameraIntrinsics(
            fx=float(rig["fx"]),
            fy=float(rig.get("fy", rig["fx"])),
            cx=float(rig.get("cx", rig["width"] / 2)),
            cy=float(rig.get("cy", rig["height"] / 2)),
            width=rig["width"],
            height=rig["height"],
        )
        return arc_cameras(
            count=int(rig["count"]),
            arc_deg=float(rig["arc_deg"]),
            distance=float(rig["distance"]),
            look_at=rig["look_at"],
            intr=intr,
        )
    raise ConfigError("scene spec needs either cameras or a rig")


def synth_scene(spec: dict, out_dir) -> dict:
    """Generate scene files and return the scene manifest.

    Writes per-view camera JSON, analytic depth and reference image tensors,
    one splat table for the whole scene, and a manifest indexing them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    geometry = _geometry_from_spec(spec)
    cameras = _cameras_from_spec(spec)
    if not cameras:
        raise ConfigError("scene spec contains no cameras")

    if isinstance(geometry, PlaneGeometry):
        splats = plane_splats(geometry, cameras, grid=int(spec.get("splat_grid", 96)))
    else:
        cap_axis = spec.get("cap_axis")
        splats = sphere_splats(
            geometry,
            count=int(spec.get("splat_count", 20000)),
            cap_axis=cap_axis,
            cap_deg=float(spec.get("cap_deg", 180.0)),
        )
    write_tensor_file(out / "splats.fwt", splats.to_table())

    views = []
    for k, cam in enumerate(cameras):
        depth = analytic_depth(geometry, cam)
        if not (depth > 0).any():
            raise ConfigError(f"camera {k} does not see the geometry")
        name = f"view_{k:03d}"
        save_camera(out / f"{name}.camera.json", cam)
        write_tensor_file(out / f"{name}.depth.fwt", depth)
        write_tensor_file(out / f"{name}.image.fwt", render_analytic_image(geometry, cam))
        views.append(
            {
                "id": name,
                "camera": f"{name}.camera.json",
                "depth": f"{name}.depth.fwt",
                "image": f"{name}.image.fwt",
            }
        )
    manifest = {
        "format": "featwarp-scene-v1",
        "geometry": spec["geometry"],
        "splats": "splats.fwt",
        "views": views,
    }
    with open(out / SCENE_MANIFEST, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def scene_spec_from_file(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"scene spec {path} is not valid JSON: {e}") from e


__all__ = [
    "PlaneGeometry",
    "SphereGeometry",
    "analytic_depth",
    "arc_cameras",
    "plane_depth",
    "plane_splats",
    "render_analytic_image",
    "scene_spec_from_file",
    "sphere_depth",
    "sphere_splats",
    "surface_color",
    "synth_scene",
]
