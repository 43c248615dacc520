"""Segmentation training loop: Adam with the paper-default hyperparameters,
optional random flip/crop, per-step loss history, deterministic in seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..checkpoints import save_checkpoint, state_dict_to_arrays
from ..data.manifest import DatasetManifest
from ..data.synth import load_pair
from ..history import TrainHistory
from ..imgbuf import resize_image, resize_mask
from .losses import seg_loss_torch
from .model import BodySegNet, U2NetSpec, build_model


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class SegTrainConfig:
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    input_size: int = 64
    flip: bool = True
    crop: bool = True
    iterations: int = 200
    batch_size: int = 4
    checkpoint_every: int = 0  # 0 = only on demand
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0 < self.betas[0] < 1 and 0 < self.betas[1] < 1):
            raise ValueError("betas must lie in (0, 1)")


HISTORY_COLUMNS = ["step", "loss", "fused", "side1", "side2", "side3", "side4", "side5", "side6"]


def _load_training_pairs(manifest: DatasetManifest, size: int):
    images, masks = [], []
    for sid in manifest.ids("train"):
        image, mask, _ = load_pair(manifest, sid)
        images.append(resize_image(image, size, size))
        masks.append(resize_mask(mask, size, size))
    return np.stack(images), np.stack(masks)


def _augment_batch(images, masks, rng: np.random.Generator, cfg: SegTrainConfig):
    out_i, out_m = images.copy(), masks.copy()
    for b in range(len(out_i)):
        if cfg.flip and rng.random() < 0.5:
            out_i[b] = out_i[b, :, ::-1]
            out_m[b] = out_m[b, :, ::-1]
        if cfg.crop and rng.random() < 0.5:
            h, w = out_i[b].shape[:2]
            frac = rng.uniform(0.8, 1.0)
            ch, cw = max(1, int(h * frac)), max(1, int(w * frac))
            top = rng.integers(0, h - ch + 1)
            left = rng.integers(0, w - cw + 1)
            out_i[b] = resize_image(out_i[b, top : top + ch, left : left + cw], h, w)
            out_m[b] = resize_mask(out_m[b, top : top + ch, left : left + cw], h, w)
    return out_i, out_m


def train_segmentation(
    manifest: DatasetManifest,
    spec: U2NetSpec,
    cfg: SegTrainConfig,
    checkpoint_path=None,
) -> tuple[BodySegNet, TrainHistory]:
    model = build_model(spec, seed=cfg.seed)
    history = TrainHistory(columns=HISTORY_COLUMNS)
    if cfg.iterations == 0:
        return model, history

    ids = manifest.ids("train")
    if not ids:
        raise ValueError("manifest has no training samples")
    images, masks = _load_training_pairs(manifest, cfg.input_size)
    rng = np.random.default_rng(cfg.seed)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.lr, betas=cfg.betas, eps=cfg.eps, weight_decay=cfg.weight_decay
    )
    model.train()
    for step in range(1, cfg.iterations + 1):
        idx = rng.choice(len(images), size=min(cfg.batch_size, len(images)), replace=False)
        batch_i, batch_m = _augment_batch(images[idx], masks[idx], rng, cfg)
        x = torch.from_numpy(np.ascontiguousarray(batch_i)).permute(0, 3, 1, 2)
        t = torch.from_numpy(np.ascontiguousarray(batch_m))
        maps = model(x)
        total, parts = seg_loss_torch([m[:, 0] for m in maps], t)
        if not torch.isfinite(total):
            raise TrainingDiverged(f"non-finite loss at step {step}: {total.item()}")
        optimizer.zero_grad()
        total.backward()
        optimizer.step()
        history.append(step, total.item(), *[p.item() for p in parts])
        if checkpoint_path and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
            save_seg_checkpoint(checkpoint_path, model, step)
    if checkpoint_path:
        save_seg_checkpoint(checkpoint_path, model, cfg.iterations)
    return model, history


def save_seg_checkpoint(path, model: BodySegNet, step: int) -> Path:
    return save_checkpoint(
        path, kind="segnet", spec=model.spec.to_dict(), state=state_dict_to_arrays(model.state_dict()), step=step
    )


def load_seg_model(path) -> BodySegNet:
    from ..checkpoints import arrays_to_state_dict, load_checkpoint

    ckpt = load_checkpoint(path, expect_kind="segnet")
    model = BodySegNet(U2NetSpec.from_dict(ckpt.spec))
    model.load_state_dict(arrays_to_state_dict(ckpt.state))
    model.eval()
    return model
