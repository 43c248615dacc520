import numpy as np
import pytest

from vton.detect import DetectorConfig, StubBackend
from vton.pipeline import (
    NoPersonFound,
    PipelineConfig,
    PipelineError,
    UnknownGarment,
    load_bundle,
    make_demo_bundle,
    overlay,
    tryon,
)


def rand_img(seed, h=96, w=96):
    return np.random.default_rng(seed).random((h, w, 3), dtype=np.float32)


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    return make_demo_bundle(tmp_path_factory.mktemp("bundle"), garment_ids=("g1", "g2"), seed=4)


@pytest.fixture(scope="module")
def bundle(bundle_dir):
    return load_bundle(bundle_dir)


def stub_for(img, boxes, scores=None, input_size=640):
    h, w = img.shape[:2]
    scores = scores or [0.9] * len(boxes)
    return StubBackend.from_source_boxes(boxes, scores, h, w, input_size)


class TestOverlay:
    def test_all_ones_hard_mask_gives_cloth(self):
        base, cloth = rand_img(0, 16, 16), rand_img(1, 16, 16)
        out = overlay(base, cloth, np.ones((16, 16), dtype=np.float32), feather=0)
        assert np.array_equal(out, cloth.astype(np.float32))

    @pytest.mark.parametrize("feather", [0.0, 2.0])
    def test_all_zeros_gives_base(self, feather):
        base, cloth = rand_img(2, 16, 16), rand_img(3, 16, 16)
        out = overlay(base, cloth, np.zeros((16, 16), dtype=np.float32), feather=feather)
        assert np.array_equal(out, base.astype(np.float32))

    def test_half_plane_hard_seam(self):
        base = np.zeros((8, 8, 3), dtype=np.float32)
        cloth = np.ones((8, 8, 3), dtype=np.float32)
        mask = np.zeros((8, 8), dtype=np.float32)
        mask[:, 4:] = 1.0
        out = overlay(base, cloth, mask, feather=0)
        # per-pixel blend oracle: alpha*cloth + (1-alpha)*base
        expect = mask[:, :, None] * cloth + (1 - mask[:, :, None]) * base
        assert np.array_equal(out, expect)
        assert out[:, :4].max() == 0.0 and out[:, 4:].min() == 1.0

    def test_misaligned_raises(self):
        with pytest.raises(PipelineError):
            overlay(rand_img(0, 8, 8), rand_img(1, 8, 8), np.zeros((4, 4), dtype=np.float32))


class TestLoadBundle:
    def test_well_formed(self, bundle):
        assert bundle.garment_ids == ["g1", "g2"]
        assert bundle.seg_model is not None
        assert bundle.preview_path("g1").exists()

    def test_missing_segmentation_named(self, tmp_path):
        root = make_demo_bundle(tmp_path / "b", garment_ids=("g1",), seed=0)
        (root / "segmentation.ckpt.npz").unlink()
        with pytest.raises(PipelineError, match="segmentation"):
            load_bundle(root)

    def test_missing_garment_named(self, tmp_path):
        root = make_demo_bundle(tmp_path / "b", garment_ids=("g1",), seed=0)
        (root / "g1.ckpt.npz").unlink()
        with pytest.raises(PipelineError, match="g1"):
            load_bundle(root)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(PipelineError, match="manifest"):
            load_bundle(tmp_path / "empty")

    def test_two_loads_identical_inference(self, bundle_dir):
        img = rand_img(5)
        b1, b2 = load_bundle(bundle_dir), load_bundle(bundle_dir)
        backend = stub_for(img, [(20, 20, 70, 80)])
        r1 = tryon(img, "g1", b1, PipelineConfig(), backend=backend)
        r2 = tryon(img, "g1", b2, PipelineConfig(), backend=backend)
        assert np.array_equal(r1.output, r2.output)


class TestTryOn:
    def test_single_person_locality(self, bundle):
        img = rand_img(6)
        backend = stub_for(img, [(20, 20, 70, 80)])
        result = tryon(img, "g1", bundle, PipelineConfig(), backend=backend)
        assert result.output.shape == img.shape
        assert len(result.persons) == 1
        x1, y1, x2, y2 = result.persons[0].source_box
        outside = np.ones(img.shape[:2], dtype=bool)
        outside[y1:y2, x1:x2] = False
        assert np.array_equal(result.output[outside], img[outside])
        assert not np.array_equal(result.output, img)

    def test_two_disjoint_persons(self, bundle):
        img = rand_img(7, 96, 160)
        backend = stub_for(img, [(5, 10, 60, 90), (100, 10, 155, 90)], scores=[0.9, 0.8])
        result = tryon(img, "g1", bundle, PipelineConfig(), backend=backend)
        assert len(result.persons) == 2
        outside = np.ones(img.shape[:2], dtype=bool)
        modified = np.zeros(img.shape[:2], dtype=bool)
        for rec in result.persons:
            x1, y1, x2, y2 = rec.source_box
            outside[y1:y2, x1:x2] = False
            modified[y1:y2, x1:x2] = True
        assert np.array_equal(result.output[outside], img[outside])
        assert not np.array_equal(result.output[modified], img[modified])

    def test_persons_processed_in_descending_score(self, bundle):
        img = rand_img(8, 96, 160)
        backend = stub_for(img, [(5, 10, 60, 90), (100, 10, 155, 90)], scores=[0.3, 0.8])
        result = tryon(img, "g1", bundle, PipelineConfig(), backend=backend)
        scores = [rec.detection.score for rec in result.persons]
        assert scores == sorted(scores, reverse=True)

    def test_no_person_error_policy(self, bundle):
        img = rand_img(9)
        with pytest.raises(NoPersonFound):
            tryon(img, "g1", bundle, PipelineConfig(fallback="error"), backend=StubBackend([]))

    def test_no_person_passthrough_policy(self, bundle):
        img = rand_img(10)
        result = tryon(img, "g1", bundle, PipelineConfig(fallback="passthrough"), backend=StubBackend([]))
        assert np.array_equal(result.output, img)
        assert result.persons == []

    def test_unknown_garment(self, bundle):
        with pytest.raises(UnknownGarment):
            tryon(rand_img(11), "missing", bundle, PipelineConfig())

    def test_deterministic_output(self, bundle):
        img = rand_img(12)
        backend = stub_for(img, [(20, 20, 70, 80)])
        a = tryon(img, "g1", bundle, PipelineConfig(), backend=backend)
        b = tryon(img, "g1", bundle, PipelineConfig(), backend=backend)
        assert np.array_equal(a.output, b.output)

    def test_records_and_timings(self, bundle):
        img = rand_img(13)
        backend = stub_for(img, [(20, 20, 70, 80)])
        result = tryon(img, "g2", bundle, PipelineConfig(), backend=backend)
        rec = result.persons[0]
        x1, y1, x2, y2 = rec.source_box
        assert rec.mask.shape == (y2 - y1, x2 - x1)
        assert rec.cloth.shape == (y2 - y1, x2 - x1, 3)
        assert set(rec.mask.ravel()) <= {0.0, 1.0}
        assert set(result.timings) == {"detect", "segment", "translate", "composite"}


class TestResizeRoundTrip:
    @pytest.mark.parametrize("seed", range(5))
    def test_mask_down_up_iou(self, seed):
        # convex synthetic masks survive the model-size round trip
        from vton.imgbuf import resize_mask
        from vton.segnet import mask_iou

        rng = np.random.default_rng(seed)
        mask = np.zeros((96, 96), dtype=np.float32)
        h, w = rng.integers(30, 60, 2)
        r, c = rng.integers(5, 30, 2)
        mask[r : r + h, c : c + w] = 1.0
        down = resize_mask(mask, 64, 64)
        up = resize_mask(down, 96, 96)
        assert mask_iou(up, mask) >= 0.9
