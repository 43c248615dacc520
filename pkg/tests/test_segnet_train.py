import numpy as np
import pytest
import torch

from test_segnet import tiny_spec
from vton.checkpoints import CheckpointError, load_checkpoint, save_checkpoint
from vton.data import synth_dataset
from vton.segnet import (
    SegTrainConfig,
    TrainingDiverged,
    load_seg_model,
    save_seg_checkpoint,
    train_segmentation,
    u2net_forward,
)


@pytest.fixture(scope="module")
def small_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    return synth_dataset(root, n=6, size=32, seed=3, split_fraction=0.8)


def fast_cfg(**kw):
    base = dict(iterations=3, batch_size=2, input_size=32, seed=5, flip=False, crop=False)
    base.update(kw)
    return SegTrainConfig(**base)


class TestTrainSegmentation:
    def test_zero_iterations(self, small_manifest):
        model, history = train_segmentation(small_manifest, tiny_spec(), fast_cfg(iterations=0))
        assert history.rows == []
        assert model is not None

    def test_identical_seeds_identical_curves(self, small_manifest):
        _, h1 = train_segmentation(small_manifest, tiny_spec(), fast_cfg())
        _, h2 = train_segmentation(small_manifest, tiny_spec(), fast_cfg())
        assert h1.rows == h2.rows

    def test_history_columns(self, small_manifest):
        _, history = train_segmentation(small_manifest, tiny_spec(), fast_cfg())
        assert history.columns[:2] == ["step", "loss"]
        assert len(history.rows) == 3
        assert all(len(r) == len(history.columns) for r in history.rows)

    def test_divergence_aborts(self, small_manifest):
        # lr large enough to overflow float32 activations within a step or two
        cfg = fast_cfg(lr=1e30, iterations=6)
        with pytest.raises(TrainingDiverged):
            train_segmentation(small_manifest, tiny_spec(), cfg)

    def test_flip_crop_augmentation_runs(self, small_manifest):
        _, history = train_segmentation(
            small_manifest, tiny_spec(), fast_cfg(flip=True, crop=True, iterations=2)
        )
        assert len(history.rows) == 2

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            SegTrainConfig(lr=0.0)
        with pytest.raises(ValueError):
            SegTrainConfig(betas=(1.5, 0.9))


class TestCheckpoints:
    def test_round_trip_inference_identical(self, small_manifest, tmp_path):
        model, _ = train_segmentation(small_manifest, tiny_spec(), fast_cfg(iterations=2))
        path = tmp_path / "seg.ckpt.npz"
        save_seg_checkpoint(path, model, step=2)
        loaded = load_seg_model(path)
        imgs = np.random.default_rng(0).random((1, 32, 32, 3), dtype=np.float32)
        a = u2net_forward(model, imgs)
        b = u2net_forward(loaded, imgs)
        assert np.array_equal(a.fused, b.fused)

    def test_step_and_kind_recorded(self, tmp_path):
        path = save_checkpoint(tmp_path / "c.npz", "segnet", {"x": 1}, {"w": np.ones(3)}, step=7)
        ckpt = load_checkpoint(path)
        assert ckpt.kind == "segnet" and ckpt.step == 7
        assert np.array_equal(ckpt.state["w"], np.ones(3))

    def test_kind_mismatch(self, tmp_path):
        path = save_checkpoint(tmp_path / "c.npz", "transnet", {}, {}, step=0)
        with pytest.raises(CheckpointError, match="kind"):
            load_checkpoint(path, expect_kind="segnet")

    def test_missing_file_named(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "absent.npz")

    def test_version_check(self, tmp_path):
        import io
        import json

        meta = {"format_version": 99, "kind": "segnet", "spec": {}, "step": 0, "extra": {}}
        arrays = {"__meta__": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
        buf = io.BytesIO()
        np.savez(buf, **arrays)
        path = tmp_path / "bad.npz"
        path.write_bytes(buf.getvalue())
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)
