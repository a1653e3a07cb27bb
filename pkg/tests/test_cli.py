"""End-to-end CLI tests through subprocess invocation of the entry point."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from featwarp import (
    Camera,
    CameraExtrinsics,
    CameraIntrinsics,
    read_tensor_file,
    save_camera,
    write_tensor_file,
)
from featwarp.maps import FeatureMap, save_bundle
from featwarp.maps import AttentionBundle, BundleLayer


def featwarp(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "featwarp.cli", *[str(a) for a in args]],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def workdir(tmp_path, rng):
    intr = CameraIntrinsics(fx=64.0, fy=64.0, cx=32.0, cy=32.0, width=64, height=64)
    cam = Camera(intr, CameraExtrinsics.identity())
    save_camera(tmp_path / "cam.json", cam)
    m = np.eye(4)
    m[0, 3] = 0.2
    save_camera(tmp_path / "cam_b.json", Camera(intr, CameraExtrinsics(m)))
    write_tensor_file(tmp_path / "depth.fwt", np.full((64, 64), 2.0))
    write_tensor_file(tmp_path / "features.fwt", rng.normal(size=(3, 64, 64)).astype(np.float32))
    return tmp_path


class TestWarpCommand:
    def test_identity_cameras_reproduce_input(self, workdir):
        r = featwarp(
            "warp",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam.json",
            "--depth", workdir / "depth.fwt",
            "--features", workdir / "features.fwt",
            "--out", workdir / "warped.fwt",
            "--mask-out", workdir / "mask.fwt",
        )
        assert r.returncode == 0, r.stderr
        out = read_tensor_file(workdir / "warped.fwt")
        src = read_tensor_file(workdir / "features.fwt")
        assert np.abs(out - src).max() <= 1e-6
        assert read_tensor_file(workdir / "mask.fwt").all()

    def test_repeat_invocation_byte_identical(self, workdir):
        args = (
            "warp",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam_b.json",
            "--depth", workdir / "depth.fwt",
            "--features", workdir / "features.fwt",
        )
        featwarp(*args, "--out", workdir / "w1.fwt")
        featwarp(*args, "--out", workdir / "w2.fwt")
        assert (workdir / "w1.fwt").read_bytes() == (workdir / "w2.fwt").read_bytes()

    def test_bundle_mode_and_field_out(self, workdir, rng):
        bundle = AttentionBundle(
            (
                BundleLayer("up0", FeatureMap(rng.normal(size=(1, 32, 32)).astype(np.float32))),
                BundleLayer("up1", FeatureMap(rng.normal(size=(1, 64, 64)).astype(np.float32))),
            )
        )
        save_bundle(bundle, workdir / "bundle")
        r = featwarp(
            "warp",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam_b.json",
            "--depth", workdir / "depth.fwt",
            "--bundle", workdir / "bundle",
            "--out-bundle", workdir / "warped_bundle",
            "--masks-out", workdir / "masks",
            "--field-out", workdir / "field.fwt",
        )
        assert r.returncode == 0, r.stderr
        assert (workdir / "warped_bundle" / "manifest.json").exists()
        assert (workdir / "masks" / "mask_32.fwt").exists()
        assert (workdir / "masks" / "mask_64.fwt").exists()
        field = read_tensor_file(workdir / "field.fwt")
        assert field.shape == (3, 64, 64)

    def test_contract_violation_gives_json_error(self, workdir):
        r = featwarp(
            "warp",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam.json",
            "--depth", workdir / "depth.fwt",
        )
        assert r.returncode == 2
        err = json.loads(r.stderr.strip())
        assert err["error"] == "config-error"

    def test_bad_tensor_file_error_variant(self, workdir):
        (workdir / "junk.fwt").write_bytes(b"JUNKJUNKJUNK")
        r = featwarp(
            "warp",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam.json",
            "--depth", workdir / "junk.fwt",
            "--features", workdir / "features.fwt",
            "--out", workdir / "w.fwt",
        )
        assert r.returncode == 2
        assert json.loads(r.stderr.strip())["error"] == "bad-magic"


class TestMaskCommand:
    def test_mask_written_with_png(self, workdir):
        r = featwarp(
            "mask",
            "--tgt-camera", workdir / "cam.json",
            "--src-camera", workdir / "cam_b.json",
            "--depth", workdir / "depth.fwt",
            "--out", workdir / "m.fwt",
            "--png", workdir / "m.png",
        )
        assert r.returncode == 0, r.stderr
        m = read_tensor_file(workdir / "m.fwt")
        assert m.shape == (64, 64)
        assert set(np.unique(m)) <= {0.0, 1.0}
        assert (workdir / "m.png").stat().st_size > 0


class TestRenderDepthCommand:
    def test_render_and_filter(self, workdir):
        table = np.array(
            [
                [0.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.3, 0.3, 1.0],
                [0.5, 0.0, 2.5, 1.0, 0.0, 0.0, 0.2, 0.2, 1.0],
            ],
            dtype=np.float32,
        )
        write_tensor_file(workdir / "splats.fwt", table)
        r = featwarp(
            "render-depth",
            "--splats", workdir / "splats.fwt",
            "--camera", workdir / "cam.json",
            "--filter-camera", workdir / "cam_b.json",
            "--theta-max", 60.0,
            "--out", workdir / "d.fwt",
            "--filtered-out", workdir / "kept.fwt",
        )
        assert r.returncode == 0, r.stderr
        d = read_tensor_file(workdir / "d.fwt")
        assert d.shape == (64, 64)
        assert (d > 0).any()
        kept = read_tensor_file(workdir / "kept.fwt")
        assert kept.shape[1] == 9

    def test_requires_some_output(self, workdir):
        write_tensor_file(workdir / "splats.fwt", np.zeros((0, 9), dtype=np.float32))
        r = featwarp("render-depth", "--splats", workdir / "splats.fwt", "--camera", workdir / "cam.json")
        assert r.returncode == 2


class TestBlendCommand:
    def test_alpha_zero_reproduces_fresh_exactly(self, workdir, rng):
        write_tensor_file(workdir / "w.fwt", rng.normal(size=(2, 8, 8)).astype(np.float32))
        fresh = rng.normal(size=(2, 8, 8)).astype(np.float32)
        write_tensor_file(workdir / "f.fwt", fresh)
        write_tensor_file(workdir / "m.fwt", np.ones((8, 8), dtype=np.float32))
        r = featwarp(
            "blend",
            "--warped", workdir / "w.fwt",
            "--fresh", workdir / "f.fwt",
            "--mask", workdir / "m.fwt",
            "--alpha", 0.0,
            "--out", workdir / "b.fwt",
        )
        assert r.returncode == 0, r.stderr
        np.testing.assert_array_equal(read_tensor_file(workdir / "b.fwt"), fresh)

    def test_schedule_flags_print_alpha(self, workdir):
        r = featwarp("blend", "--t", 5, "--total-steps", 10, "--alpha0", 0.9, "--print-alpha")
        assert r.returncode == 0, r.stderr
        assert json.loads(r.stdout)["alpha"] == 0.45

    def test_step_out_of_range_error(self, workdir):
        r = featwarp("blend", "--t", 11, "--total-steps", 10, "--print-alpha")
        assert r.returncode == 2
        assert json.loads(r.stderr.strip())["error"] == "step-out-of-range"


class TestSynthAndRun:
    def scene_spec(self, path: Path):
        spec = {
            "geometry": {"type": "plane", "z": 2.0},
            "rig": {
                "type": "arc",
                "count": 4,
                "arc_deg": 20.0,
                "distance": 2.2,
                "look_at": [0, 0, 2.0],
                "fx": 50.0,
                "width": 64,
                "height": 64,
            },
            "splat_grid": 32,
        }
        path.write_text(json.dumps(spec))

    def test_synth_then_run_deterministic(self, tmp_path):
        self.scene_spec(tmp_path / "scene.json")
        r = featwarp("synth", "--spec", tmp_path / "scene.json", "--out-dir", tmp_path / "scene")
        assert r.returncode == 0, r.stderr
        run_cfg = {
            "scene_manifest": "scene/scene_manifest.json",
            "source": "view_000",
            "editor": {"type": "stamp", "center": [0.5, 0.5], "radius": 0.25},
            "stages": 2,
            "subset_size": 2,
            "seed": 5,
        }
        (tmp_path / "run.json").write_text(json.dumps(run_cfg))
        r1 = featwarp("run", "--config", tmp_path / "run.json", "--out-dir", tmp_path / "out1")
        assert r1.returncode == 0, r1.stderr
        r2 = featwarp("run", "--config", tmp_path / "run.json", "--out-dir", tmp_path / "out2")
        assert r2.returncode == 0, r2.stderr
        m1 = (tmp_path / "out1" / "run_manifest.json").read_bytes()
        m2 = (tmp_path / "out2" / "run_manifest.json").read_bytes()
        assert m1 == m2
        manifest = json.loads(m1)
        assert manifest["source"] == "view_000"
        assert len(manifest["stages"]) == 2


class TestEvalCommand:
    def test_psnr_inf_sentinel_for_identical(self, workdir):
        r = featwarp("eval", "--a", workdir / "features.fwt", "--b", workdir / "features.fwt")
        assert r.returncode == 0, r.stderr
        out = json.loads(r.stdout)
        assert out["l1"] == 0.0
        assert out["max_abs"] == 0.0
        assert out["psnr"] == "inf"

    def test_metrics_values(self, workdir):
        a = np.zeros((2, 4, 4), dtype=np.float32)
        b = np.full((2, 4, 4), 0.5, dtype=np.float32)
        write_tensor_file(workdir / "a.fwt", a)
        write_tensor_file(workdir / "b.fwt", b)
        r = featwarp("eval", "--a", workdir / "a.fwt", "--b", workdir / "b.fwt")
        out = json.loads(r.stdout)
        assert out["l1"] == pytest.approx(0.5)
        assert out["max_abs"] == pytest.approx(0.5)
        assert out["psnr"] == pytest.approx(10 * np.log10(1 / 0.25))

    def test_shape_mismatch_error(self, workdir):
        write_tensor_file(workdir / "small.fwt", np.zeros((2, 2), dtype=np.float32))
        r = featwarp("eval", "--a", workdir / "features.fwt", "--b", workdir / "small.fwt")
        assert r.returncode == 2
        assert json.loads(r.stderr.strip())["error"] == "config-error"
