import numpy as np
import pytest
import torch

from vton.data import synth_dataset
from vton.transnet import (
    DiscriminatorSpec,
    GanTrainConfig,
    GeneratorSpec,
    TrainingDiverged,
    generator_forward,
    load_gan_generator,
    load_gan_models,
    save_gan_checkpoint,
    train_translation,
)


@pytest.fixture(scope="module")
def gan_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("gan_synth")
    return synth_dataset(root, n=4, size=32, seed=9, split_fraction=1.0)


def tiny_gspec(**kw):
    base = dict(base_channels=4, global_downsamples=1, residual_blocks=1, enhancers=0)
    base.update(kw)
    return GeneratorSpec(**base)


def tiny_dspec():
    return DiscriminatorSpec(num_scales=2, layers=2, base_channels=4)


def fast_cfg(**kw):
    base = dict(image_size=32, batch_size=2, epochs=1, seed=3, perceptual="identity")
    base.update(kw)
    return GanTrainConfig(**base)


class TestTrainTranslation:
    def test_zero_epochs(self, gan_manifest):
        gen, disc, history = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg(epochs=0))
        assert history.rows == []
        assert gen is not None and disc is not None

    def test_identical_seeds_identical_history(self, gan_manifest):
        _, _, h1 = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg())
        _, _, h2 = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg())
        assert h1.rows == h2.rows

    def test_history_columns(self, gan_manifest):
        _, _, history = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg())
        assert history.columns == ["step", "d_loss", "g_gan", "g_fm", "g_perc"]
        assert len(history.rows) == 2  # 4 samples / batch 2 x 1 epoch

    def test_staged_training_with_enhancer(self, gan_manifest):
        # one global epoch then one joint epoch; both must run
        spec = tiny_gspec(enhancers=1)
        _, _, history = train_translation(
            gan_manifest, spec, tiny_dspec(), fast_cfg(epochs=2, global_epochs=1)
        )
        assert len(history.rows) == 4

    def test_size_compatibility_checked(self, gan_manifest):
        with pytest.raises(ValueError, match="divisible"):
            train_translation(gan_manifest, tiny_gspec(global_downsamples=4), tiny_dspec(), fast_cfg(image_size=24))

    def test_divergence_aborts_and_checkpoints(self, gan_manifest, tmp_path):
        path = tmp_path / "gan.ckpt.npz"
        cfg = fast_cfg(epochs=3, g_lr=1e32, d_lr=1e32, perceptual="off")
        with pytest.raises(TrainingDiverged):
            train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), cfg, checkpoint_path=path)
        assert path.exists()

    def test_perceptual_off(self, gan_manifest):
        _, _, history = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg(perceptual="off"))
        assert all(row[4] == 0.0 for row in history.rows)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            GanTrainConfig(lambda_fm=-1.0)


class TestGanCheckpoints:
    def test_round_trip(self, gan_manifest, tmp_path):
        gen, disc, _ = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg())
        path = tmp_path / "gan.ckpt.npz"
        save_gan_checkpoint(path, gen, disc, tiny_gspec(), tiny_dspec(), step=2)
        loaded = load_gan_generator(path)
        masks = np.zeros((1, 32, 32), dtype=np.float32)
        masks[0, 8:24, 8:24] = 1.0
        assert np.array_equal(generator_forward(gen, masks), generator_forward(loaded, masks))

    def test_both_models_restored(self, gan_manifest, tmp_path):
        gen, disc, _ = train_translation(gan_manifest, tiny_gspec(), tiny_dspec(), fast_cfg())
        path = tmp_path / "gan.ckpt.npz"
        save_gan_checkpoint(path, gen, disc, tiny_gspec(), tiny_dspec(), step=2)
        g2, d2 = load_gan_models(path)
        for (na, a), (nb, b) in zip(sorted(disc.state_dict().items()), sorted(d2.state_dict().items())):
            assert na == nb and torch.equal(a, b)
