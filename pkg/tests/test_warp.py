"""Feature-map warping against shift cases and the scalar sampling oracle."""

from __future__ import annotations

import numpy as np
import pytest

from featwarp import (
    AttentionBundle,
    BundleLayer,
    ConfigError,
    DimensionMismatchError,
    FeatureMap,
    Mask,
    WarpField,
    load_bundle,
    resample_warp_field,
    save_bundle,
    warp_bundle,
    warp_feature_map,
)
from reference import ref_warp_features


def identity_field(h: int, w: int) -> WarpField:
    ys, xs = np.mgrid[0:h, 0:w]
    return WarpField(xs.astype(float), ys.astype(float), Mask.ones(h, w), w, h)


def random_field(rng, h, w, src_w=None, src_h=None) -> WarpField:
    src_w = src_w or w
    src_h = src_h or h
    u = rng.uniform(-2, src_w + 1, size=(h, w))
    v = rng.uniform(-2, src_h + 1, size=(h, w))
    uc, vc = u + 0.5, v + 0.5
    valid = (uc >= 0) & (uc < src_w) & (vc >= 0) & (vc < src_h)
    valid &= rng.random((h, w)) > 0.15
    return WarpField(u, v, Mask(valid.astype(np.float32)), src_w, src_h)


class TestResample:
    def test_same_size_is_identity(self):
        f = identity_field(16, 16)
        g = resample_warp_field(f, 16, 16)
        np.testing.assert_array_equal(g.u, f.u)
        np.testing.assert_array_equal(g.v, f.v)
        np.testing.assert_array_equal(g.valid.data, f.valid.data)

    def test_downscale_of_identity_is_identity(self):
        f = identity_field(32, 32)
        g = resample_warp_field(f, 16, 16)
        ys, xs = np.mgrid[0:16, 0:16]
        np.testing.assert_allclose(g.u, xs, atol=1e-12)
        np.testing.assert_allclose(g.v, ys, atol=1e-12)
        assert g.src_width == 16 and g.src_height == 16
        assert g.valid.data.all()

    def test_zero_target_size_rejected(self):
        with pytest.raises(ConfigError):
            resample_warp_field(identity_field(8, 8), 0, 8)

    def test_nearest_neighbor_oracle(self, rng):
        f = random_field(rng, 20, 24)
        new_h, new_w = 7, 9
        g = resample_warp_field(f, new_h, new_w)
        for iy in range(new_h):
            for ix in range(new_w):
                oy = (iy * 20) // new_h
                ox = (ix * 24) // new_w
                assert g.u[iy, ix] == f.u[oy, ox] * (new_w / 24)
                assert g.v[iy, ix] == f.v[oy, ox] * (new_h / 20)
                assert g.valid.data[iy, ix] == f.valid.data[oy, ox]

    def test_validity_never_interpolated(self, rng):
        f = random_field(rng, 16, 16)
        g = resample_warp_field(f, 11, 13)
        assert set(np.unique(g.valid.data)) <= {0.0, 1.0}


class TestWarpFeatureMap:
    def test_identity_field_exact(self, rng):
        src = FeatureMap(rng.normal(size=(3, 12, 10)).astype(np.float32))
        out, mask = warp_feature_map(src, identity_field(12, 10), "bilinear")
        np.testing.assert_array_equal(out.data, src.data)
        np.testing.assert_array_equal(mask.data, 1.0)

    def test_integer_shift_nearest(self, rng):
        h, w = 8, 9
        src = FeatureMap(rng.normal(size=(2, h, w)).astype(np.float32))
        ys, xs = np.mgrid[0:h, 0:w]
        u = xs + 1.0
        uc = u + 0.5
        valid = (uc < w).astype(np.float32)
        field = WarpField(u, ys.astype(float), Mask(valid), w, h)
        out, mask = warp_feature_map(src, field, "nearest")
        np.testing.assert_array_equal(out.data[:, :, :-1], src.data[:, :, 1:])
        np.testing.assert_array_equal(out.data[:, :, -1], 0.0)
        np.testing.assert_array_equal(mask.data[:, :-1], 1.0)
        np.testing.assert_array_equal(mask.data[:, -1], 0.0)

    def test_matches_scalar_oracle(self, rng):
        for sampling in ("bilinear", "nearest"):
            for _ in range(10):
                h, w = int(rng.integers(4, 14)), int(rng.integers(4, 14))
                sh, sw = int(rng.integers(4, 14)), int(rng.integers(4, 14))
                src = FeatureMap(rng.normal(size=(3, sh, sw)).astype(np.float32))
                field = random_field(rng, h, w, src_w=sw, src_h=sh)
                out, mask = warp_feature_map(src, field, sampling)
                ref_out, ref_mask = ref_warp_features(
                    src.data, field.u, field.v, field.valid.data, sampling
                )
                ref_mask = ref_mask * field.valid.data
                np.testing.assert_allclose(out.data, ref_out, atol=1e-6)
                np.testing.assert_array_equal(mask.data, ref_mask)

    def test_linearity_on_valid_pixels(self, rng):
        h = w = 12
        f = rng.normal(size=(4, h, w)).astype(np.float32)
        g = rng.normal(size=(4, h, w)).astype(np.float32)
        a, b = 0.7, -1.3
        field = random_field(rng, h, w)
        out_combo, mask = warp_feature_map(FeatureMap(a * f + b * g), field)
        out_f, _ = warp_feature_map(FeatureMap(f), field)
        out_g, _ = warp_feature_map(FeatureMap(g), field)
        lin = a * out_f.data + b * out_g.data
        sel = mask.data > 0
        np.testing.assert_allclose(out_combo.data[:, sel], lin[:, sel], atol=1e-6)

    def test_bilinear_mask_subset_of_nearest(self, rng):
        for _ in range(10):
            field = random_field(rng, 10, 10)
            src = FeatureMap(rng.normal(size=(1, 10, 10)).astype(np.float32))
            _, m_bil = warp_feature_map(src, field, "bilinear")
            _, m_near = warp_feature_map(src, field, "nearest")
            assert np.all(m_bil.data <= m_near.data)

    def test_channel_permutation_commutes(self, rng):
        src = rng.normal(size=(5, 9, 9)).astype(np.float32)
        field = random_field(rng, 9, 9)
        perm = rng.permutation(5)
        out_then_perm = warp_feature_map(FeatureMap(src), field)[0].data[perm]
        perm_then_out = warp_feature_map(FeatureMap(src[perm]), field)[0].data
        np.testing.assert_array_equal(out_then_perm, perm_then_out)

    def test_dimension_mismatch(self, rng):
        src = FeatureMap(np.zeros((1, 4, 4), dtype=np.float32))
        with pytest.raises(DimensionMismatchError):
            warp_feature_map(src, identity_field(4, 5))

    def test_invalid_pixels_zero_filled(self, rng):
        src = FeatureMap(np.ones((1, 6, 6), dtype=np.float32))
        f = identity_field(6, 6)
        valid = f.valid.data.copy()
        valid[2, 3] = 0.0
        field = WarpField(f.u, f.v, Mask(valid), 6, 6)
        out, _ = warp_feature_map(src, field)
        assert out.data[0, 2, 3] == 0.0


class TestWarpBundle:
    def bundle(self, rng, with_cross=True) -> AttentionBundle:
        layers = [
            BundleLayer(
                "up0",
                FeatureMap(rng.normal(size=(2, 32, 32)).astype(np.float32)),
                FeatureMap(rng.normal(size=(3, 32, 32)).astype(np.float32)) if with_cross else None,
            ),
            BundleLayer(
                "up1",
                FeatureMap(rng.normal(size=(2, 64, 64)).astype(np.float32)),
            ),
        ]
        return AttentionBundle(tuple(layers))

    def test_identity_round_trip(self, rng):
        b = self.bundle(rng)
        warped, masks = warp_bundle(b, identity_field(64, 64))
        for orig, new in zip(b.layers, warped.layers):
            np.testing.assert_array_equal(orig.self_attn.data, new.self_attn.data)
        assert set(masks) == {32, 64}
        assert all(m.data.all() for m in masks.values())

    def test_masks_consistent_across_resolutions(self, rng):
        # the 32 mask equals the nearest-downsample of the 64 mask when both
        # came from the same full-resolution geometry
        field = random_field(rng, 64, 64)
        b = self.bundle(rng)
        _, masks = warp_bundle(b, field, "nearest")
        down = np.zeros((32, 32), dtype=np.float32)
        m64 = masks[64].data
        for iy in range(32):
            for ix in range(32):
                down[iy, ix] = m64[2 * iy, 2 * ix]
        np.testing.assert_array_equal(masks[32].data, down)

    def test_absent_cross_stays_absent(self, rng):
        b = self.bundle(rng, with_cross=False)
        warped, _ = warp_bundle(b, identity_field(64, 64))
        assert warped.layers[0].cross_attn is None
        assert warped.layers[1].cross_attn is None

    def test_self_and_cross_share_the_field(self, rng):
        b = self.bundle(rng)
        field = random_field(rng, 64, 64)
        warped, _ = warp_bundle(b, field)
        sized = resample_warp_field(field, 32, 32)
        again, _ = warp_feature_map(b.layers[0].cross_attn, sized)
        np.testing.assert_array_equal(warped.layers[0].cross_attn.data, again.data)

    def test_bundle_dir_round_trip(self, rng, tmp_path):
        b = self.bundle(rng)
        save_bundle(b, tmp_path / "bundle")
        back = load_bundle(tmp_path / "bundle")
        assert [l.layer_id for l in back.layers] == ["up0", "up1"]
        np.testing.assert_array_equal(back.layers[0].self_attn.data, b.layers[0].self_attn.data)
        np.testing.assert_array_equal(back.layers[0].cross_attn.data, b.layers[0].cross_attn.data)
        assert back.layers[1].cross_attn is None
        assert back.resolutions == b.resolutions
