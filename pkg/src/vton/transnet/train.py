"""Conditional translation training: alternating discriminator/generator
steps per batch, with staged global-then-joint training when enhancer
stages are present. History records the adversarial, feature-matching, and
perceptual components separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from ..checkpoints import arrays_to_state_dict, load_checkpoint, save_checkpoint, state_dict_to_arrays
from ..data.manifest import DatasetManifest
from ..data.synth import load_pair
from ..history import TrainHistory
from ..imgbuf import resize_image, resize_mask
from .discriminator import DiscriminatorSpec, MultiScaleDiscriminator, build_discriminator
from .generator import GeneratorSpec, build_generator, masks_to_tensor
from .losses import GanLossError, GanTerms, fm_loss, gan_loss, get_extractor, perceptual_loss, total_objective


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class GanTrainConfig:
    image_size: int = 64
    batch_size: int = 4
    epochs: int = 10
    lambda_fm: float = 10.0
    lambda_perc: float = 10.0
    g_lr: float = 2e-4
    d_lr: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    flavor: str = "vanilla"  # or "least_squares"
    perceptual: str = "identity"  # extractor id, or "off"
    global_epochs: int | None = None  # staged phase length when enhancers > 0
    seed: int = 0

    def __post_init__(self):
        if self.lambda_fm < 0 or self.lambda_perc < 0:
            raise ValueError("loss weights must be >= 0")


HISTORY_COLUMNS = ["step", "d_loss", "g_gan", "g_fm", "g_perc"]


def _load_gan_pairs(manifest: DatasetManifest, size: int):
    masks, targets = [], []
    for sid in manifest.ids("train"):
        _, mask, target = load_pair(manifest, sid)
        if target is None:
            raise ValueError(f"sample {sid} has no translation target image")
        masks.append(resize_mask(mask, size, size))
        targets.append(resize_image(target, size, size))
    return np.stack(masks), np.stack(targets)


def train_translation(
    manifest: DatasetManifest,
    gspec: GeneratorSpec,
    dspec: DiscriminatorSpec,
    cfg: GanTrainConfig,
    checkpoint_path=None,
    eval_hook: Callable[[int, torch.nn.Module], None] | None = None,
):
    if cfg.image_size % gspec.size_divisor:
        raise ValueError(f"image_size {cfg.image_size} not divisible by {gspec.size_divisor}")
    torch.manual_seed(cfg.seed)
    generator = build_generator(gspec)
    discriminator = build_discriminator(dspec)
    history = TrainHistory(columns=HISTORY_COLUMNS)
    if cfg.epochs == 0:
        return generator, discriminator, history

    ids = manifest.ids("train")
    if not ids:
        raise ValueError("manifest has no training samples")
    masks, targets = _load_gan_pairs(manifest, cfg.image_size)
    rng = np.random.default_rng(cfg.seed)
    opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.g_lr, betas=cfg.betas)
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.d_lr, betas=cfg.betas)
    extractor = get_extractor(cfg.perceptual) if cfg.perceptual != "off" else None

    global_epochs = 0
    if gspec.enhancers > 0:
        global_epochs = cfg.global_epochs if cfg.global_epochs is not None else cfg.epochs // 2

    step = 0
    n = len(masks)
    for epoch in range(cfg.epochs):
        global_phase = epoch < global_epochs
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            s3 = masks_to_tensor(masks[idx])
            x = torch.from_numpy(np.ascontiguousarray(targets[idx])).permute(0, 3, 1, 2)
            if global_phase:
                for _ in range(gspec.enhancers):
                    s3 = torch.nn.functional.avg_pool2d(s3, 2)
                    x = torch.nn.functional.avg_pool2d(x, 2)
            fake = generator(s3, global_only=global_phase) if hasattr(generator, "global_net") else generator(s3)
            fake01 = (fake + 1.0) / 2.0

            try:
                # discriminator step
                real_stacks = discriminator(s3, x)
                fake_stacks_detached = discriminator(s3, fake01.detach())
                d_terms_real = [gan_loss(st.logits, True, cfg.flavor) for st in real_stacks]
                d_terms_fake = [gan_loss(st.logits, False, cfg.flavor) for st in fake_stacks_detached]
                d_loss = sum(d_terms_real) + sum(d_terms_fake)
                if not torch.isfinite(d_loss):
                    raise GanLossError("non-finite discriminator loss")
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()

                # generator step
                fake_stacks = discriminator(s3, fake01)
                with torch.no_grad():
                    real_stacks_ref = discriminator(s3, x)
                g_adv_terms = [gan_loss(st.logits, True, cfg.flavor) for st in fake_stacks]
                g_fm = fm_loss(real_stacks_ref, fake_stacks)
                g_perc = perceptual_loss(extractor, fake01, x) if extractor else torch.zeros(())
                terms = GanTerms(g_adv=g_adv_terms, d_real=d_terms_real, d_fake=d_terms_fake)
                g_loss, _ = total_objective(terms, g_fm, g_perc, cfg.lambda_fm, cfg.lambda_perc)
                if not torch.isfinite(g_loss):
                    raise GanLossError("non-finite generator loss")
            except GanLossError as exc:
                _abort(checkpoint_path, generator, discriminator, gspec, dspec, step, reason=str(exc))
            opt_g.zero_grad()
            g_loss.backward()
            opt_g.step()

            step += 1
            history.append(step, d_loss.item(), sum(t.item() for t in g_adv_terms), g_fm.item(), g_perc.item())
            if eval_hook is not None:
                eval_hook(step, generator)
    if checkpoint_path:
        save_gan_checkpoint(checkpoint_path, generator, discriminator, gspec, dspec, step, image_size=cfg.image_size)
    return generator, discriminator, history


def _abort(checkpoint_path, generator, discriminator, gspec, dspec, step, reason="non-finite loss"):
    if checkpoint_path:
        save_gan_checkpoint(checkpoint_path, generator, discriminator, gspec, dspec, step)
        raise TrainingDiverged(f"{reason} at step {step}; last checkpoint saved to {checkpoint_path}")
    raise TrainingDiverged(f"{reason} at step {step}")


def save_gan_checkpoint(path, generator, discriminator, gspec, dspec, step, image_size: int | None = None) -> Path:
    state = {f"g.{k}": v for k, v in state_dict_to_arrays(generator.state_dict()).items()}
    state.update({f"d.{k}": v for k, v in state_dict_to_arrays(discriminator.state_dict()).items()})
    return save_checkpoint(
        path,
        kind="transnet",
        spec={"generator": gspec.to_dict(), "discriminator": dspec.to_dict(), "image_size": image_size},
        state=state,
        step=step,
    )


def load_gan_generator(path):
    ckpt = load_checkpoint(path, expect_kind="transnet")
    gspec = GeneratorSpec.from_dict(ckpt.spec["generator"])
    generator = build_generator(gspec, seed=0)
    g_state = {k[2:]: v for k, v in ckpt.state.items() if k.startswith("g.")}
    generator.load_state_dict(arrays_to_state_dict(g_state))
    generator.eval()
    generator.input_size = ckpt.spec.get("image_size")
    return generator


def load_gan_models(path):
    ckpt = load_checkpoint(path, expect_kind="transnet")
    gspec = GeneratorSpec.from_dict(ckpt.spec["generator"])
    dspec = DiscriminatorSpec.from_dict(ckpt.spec["discriminator"])
    generator = build_generator(gspec, seed=0)
    discriminator = build_discriminator(dspec, seed=0)
    generator.load_state_dict(arrays_to_state_dict({k[2:]: v for k, v in ckpt.state.items() if k.startswith("g.")}))
    discriminator.load_state_dict(
        arrays_to_state_dict({k[2:]: v for k, v in ckpt.state.items() if k.startswith("d.")})
    )
    generator.eval()
    discriminator.eval()
    return generator, discriminator
