import numpy as np
import pytest

from vton.augment import (
    KINDS,
    AugmentConfig,
    AugmentError,
    GeometricTransform,
    apply_transform,
    augment_pair,
    inverse_map,
    sample_transform,
)


def identity_transform(kind):
    params = {
        "perspective": {"corner_shifts": np.zeros((4, 2)).tolist()},
        "piecewise_affine": {"grid": 4, "displacements": np.zeros((5, 5, 2)).tolist()},
        "elastic": {"alpha": 0.0, "sigma": 6.0, "field_seed": 3},
        "shear": {"degrees": 0.0},
        "scale": {"sx": 1.0, "sy": 1.0},
    }[kind]
    return GeometricTransform(kind=kind, params=params, seed=0)


def random_image(seed, h=32, w=32, c=3):
    rng = np.random.default_rng(seed)
    return rng.random((h, w, c), dtype=np.float32)


def random_mask(seed, h=32, w=32):
    rng = np.random.default_rng(seed)
    mask = np.zeros((h, w), dtype=np.float32)
    r0, c0 = rng.integers(2, h // 2, 2)
    mask[r0 : r0 + h // 3, c0 : c0 + w // 3] = 1.0
    return mask


class TestSampleTransform:
    def test_shear_only_range(self):
        cfg = AugmentConfig(
            perspective=False, piecewise_affine=False, elastic=False, scale=False, shear_max_degrees=10.0
        )
        t = sample_transform(cfg, seed=3)
        assert t.kind == "shear"
        assert -10.0 <= t.params["degrees"] <= 10.0

    def test_deterministic(self):
        cfg = AugmentConfig()
        assert sample_transform(cfg, 11) == sample_transform(cfg, 11)

    def test_degenerate_scale_range_is_identity(self):
        cfg = AugmentConfig(
            perspective=False, piecewise_affine=False, elastic=False, shear=False, scale_range=(1.0, 1.0)
        )
        t = sample_transform(cfg, 5)
        assert t.kind == "scale"
        img = random_image(0)
        assert np.allclose(apply_transform(t, img), img, atol=1e-6)

    def test_all_disabled_errors(self):
        cfg = AugmentConfig(perspective=False, piecewise_affine=False, elastic=False, shear=False, scale=False)
        with pytest.raises(AugmentError):
            sample_transform(cfg, 0)


class TestApplyTransform:
    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_strength_is_identity(self, kind):
        img = random_image(1)
        out = apply_transform(identity_transform(kind), img, "bilinear")
        assert np.allclose(out, img, atol=1e-6)

    def test_scale_2x_nearest_matches_inverse_map_oracle(self):
        img = np.zeros((8, 8), dtype=np.float32)
        img[3:5, 3:5] = 1.0
        t = GeometricTransform("scale", {"sx": 2.0, "sy": 2.0}, seed=0)
        out = apply_transform(t, img, "nearest")

        # per-pixel inverse-map oracle: round the source location, read it out
        expect = np.zeros_like(img)
        c = 3.5
        for r in range(8):
            for q in range(8):
                sr, sc = int(np.rint(c + (r - c) / 2)), int(np.rint(c + (q - c) / 2))
                expect[r, q] = img[sr, sc]
        assert np.array_equal(out, expect)
        # white region becomes the centered 4x4 block
        assert out[2:6, 2:6].min() == 1.0
        assert out.sum() == 16

    def test_out_of_source_fill_zero(self):
        img = np.ones((16, 16), dtype=np.float32)
        t = GeometricTransform("shear", {"degrees": 30.0}, seed=0)
        out = apply_transform(t, img, "nearest")
        assert out.min() == 0.0  # sheared-in corners are empty
        assert out.max() == 1.0

    def test_same_shape(self):
        img = random_image(2, 20, 28)
        for kind in KINDS:
            out = apply_transform(identity_transform(kind), img)
            assert out.shape == img.shape


class TestAugmentPair:
    def test_identity_preserves_pair(self):
        img, mask = random_image(3), random_mask(3)
        wi, wm = augment_pair(identity_transform("shear"), img, mask)
        assert np.allclose(wi, img, atol=1e-6)
        assert np.array_equal(wm, mask)

    @pytest.mark.parametrize("seed", range(10))
    def test_mask_stays_binary(self, seed):
        cfg = AugmentConfig()
        t = sample_transform(cfg, seed)
        _, wm = augment_pair(t, random_image(seed), random_mask(seed))
        assert set(np.unique(wm)) <= {0.0, 1.0}

    def test_uniform_piecewise_displacement_shifts_centroid(self):
        size = 64
        mask = np.zeros((size, size), dtype=np.float32)
        mask[24:40, 24:40] = 1.0
        img = np.repeat(mask[:, :, None], 3, axis=2)
        disp = np.zeros((5, 5, 2))
        disp[:, :, 0] = 4.0 / size  # +4 px in x everywhere
        t = GeometricTransform("piecewise_affine", {"grid": 4, "displacements": disp.tolist()}, seed=0)
        _, wm = augment_pair(t, img, mask)
        cy0, cx0 = np.argwhere(mask == 1).mean(axis=0)
        cy1, cx1 = np.argwhere(wm == 1).mean(axis=0)
        assert abs((cx1 - cx0) - 4.0) <= 0.5
        assert abs(cy1 - cy0) <= 0.5

    @pytest.mark.parametrize("seed", range(8))
    def test_paired_warp_agreement(self, seed):
        # warping the mask with bilinear and thresholding must agree with the
        # nearest-warped mask on >= 99% of pixels: same point mapping
        cfg = AugmentConfig()
        t = sample_transform(cfg, seed + 100)
        mask = random_mask(seed, 64, 64)
        soft = apply_transform(t, mask, "bilinear")
        hard = apply_transform(t, mask, "nearest")
        agreement = np.mean((soft >= 0.5) == (hard >= 0.5))
        assert agreement >= 0.99


class TestDeterminism:
    @pytest.mark.parametrize("seed", range(5))
    def test_repeat_application_identical(self, seed):
        cfg = AugmentConfig()
        t = sample_transform(cfg, seed)
        img = random_image(seed)
        a = apply_transform(t, img)
        b = apply_transform(t, img)
        assert np.array_equal(a, b)

    def test_elastic_field_reproducible_from_params(self):
        t1 = GeometricTransform("elastic", {"alpha": 5.0, "sigma": 4.0, "field_seed": 77}, seed=1)
        t2 = GeometricTransform("elastic", {"alpha": 5.0, "sigma": 4.0, "field_seed": 77}, seed=99)
        r1, c1 = inverse_map(t1, 32, 32)
        r2, c2 = inverse_map(t2, 32, 32)
        assert np.array_equal(r1, r2) and np.array_equal(c1, c2)

    def test_elastic_max_displacement_is_alpha(self):
        t = GeometricTransform("elastic", {"alpha": 7.0, "sigma": 4.0, "field_seed": 5}, seed=0)
        src_r, src_c = inverse_map(t, 48, 48)
        cc, rr = np.meshgrid(np.arange(48, dtype=float), np.arange(48, dtype=float))
        mag = np.sqrt((src_r - rr) ** 2 + (src_c - cc) ** 2)
        assert abs(mag.max() - 7.0) < 1e-9
