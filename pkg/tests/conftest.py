"""Shared fixtures and random-instance builders."""

from __future__ import annotations

import numpy as np
import pytest

from featwarp import Camera, CameraExtrinsics, CameraIntrinsics


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    return quat_to_matrix(rng.normal(size=4))


def random_extrinsics(rng: np.random.Generator, t_scale: float = 1.0) -> CameraExtrinsics:
    m = np.eye(4)
    m[:3, :3] = random_rotation(rng)
    m[:3, 3] = rng.normal(scale=t_scale, size=3)
    return CameraExtrinsics(m)


def random_intrinsics(rng: np.random.Generator, width=None, height=None) -> CameraIntrinsics:
    width = int(width if width is not None else rng.integers(8, 33))
    height = int(height if height is not None else rng.integers(8, 33))
    return CameraIntrinsics(
        fx=float(rng.uniform(0.5, 3.0) * width),
        fy=float(rng.uniform(0.5, 3.0) * height),
        cx=float(rng.uniform(0.25, 0.75) * width),
        cy=float(rng.uniform(0.25, 0.75) * height),
        width=width,
        height=height,
    )


def random_camera(rng: np.random.Generator, **kw) -> Camera:
    return Camera(random_intrinsics(rng, **kw), random_extrinsics(rng))


def nearby_camera(rng: np.random.Generator, cam: Camera, angle_scale=0.05, t_scale=0.1) -> Camera:
    """A second view with a small pose perturbation, sharing intrinsics."""
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(
        np.concatenate([[1.0], rng.normal(scale=angle_scale, size=3)])
    )
    m[:3, 3] = rng.normal(scale=t_scale, size=3)
    return Camera(cam.intrinsics, CameraExtrinsics(m @ cam.extrinsics.matrix))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
