"""Multi-scale patch discriminators.

The pyramid has ``num_scales`` identical-architecture discriminators with
independent weights; scale k consumes the level-k pyramid of the 6-channel
concatenation of the mask (replicated to 3 channels) and the image, where
level k+1 is level k mean-pooled by a factor of 2 (edge-replicated to even
size first, so level sizes follow ceil(H / 2^(k-1))). Every discriminator
reports its intermediate feature maps plus the final logit map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .generator import masks_to_tensor


@dataclass(frozen=True)
class DiscriminatorSpec:
    num_scales: int = 3
    layers: int = 3
    base_channels: int = 64

    def to_dict(self):
        return {"num_scales": self.num_scales, "layers": self.layers, "base_channels": self.base_channels}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class FeatureStack:
    features: list[torch.Tensor]
    logits: torch.Tensor

    @property
    def layer_count(self) -> int:
        return len(self.features) + 1


class PatchDiscriminator(nn.Module):
    """PatchGAN-style stack of strided 4x4 convolutions; the final feature
    block runs at stride 1, followed by a 1-channel logit convolution."""

    def __init__(self, spec: DiscriminatorSpec, in_channels: int = 6):
        super().__init__()
        blocks = [nn.Sequential(nn.Conv2d(in_channels, spec.base_channels, 4, stride=2, padding=1), nn.LeakyReLU(0.2, True))]
        ch = spec.base_channels
        for i in range(1, spec.layers):
            nxt = min(ch * 2, 512)
            stride = 2 if i < spec.layers - 1 else 1
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(ch, nxt, 4, stride=stride, padding=1),
                    nn.InstanceNorm2d(nxt, affine=True),
                    nn.LeakyReLU(0.2, True),
                )
            )
            ch = nxt
        self.blocks = nn.ModuleList(blocks)
        self.logit_conv = nn.Conv2d(ch, 1, 4, stride=1, padding=1)

    def forward(self, x) -> FeatureStack:
        features = []
        h = x
        for block in self.blocks:
            h = block(h)
            features.append(h)
        return FeatureStack(features=features, logits=self.logit_conv(h))


def _downsample2(x: torch.Tensor) -> torch.Tensor:
    h, w = x.shape[2:]
    if h % 2 or w % 2:
        x = F.pad(x, (0, w % 2, 0, h % 2), mode="replicate")
    return F.avg_pool2d(x, 2)


class MultiScaleDiscriminator(nn.Module):
    def __init__(self, spec: DiscriminatorSpec, in_channels: int = 6):
        super().__init__()
        self.spec = spec
        self.scales = nn.ModuleList(PatchDiscriminator(spec, in_channels) for _ in range(spec.num_scales))

    def forward(self, s3: torch.Tensor, img: torch.Tensor) -> list[FeatureStack]:
        x = torch.cat([s3, img], dim=1)
        stacks = []
        for k, disc in enumerate(self.scales):
            stacks.append(disc(x))
            if k < len(self.scales) - 1:
                x = _downsample2(x)
        return stacks


def build_discriminator(spec: DiscriminatorSpec, seed: int | None = None) -> MultiScaleDiscriminator:
    if seed is not None:
        torch.manual_seed(seed)
    return MultiScaleDiscriminator(spec)


def discriminator_forward(model: MultiScaleDiscriminator, masks: np.ndarray, imgs: np.ndarray) -> list[FeatureStack]:
    """Numpy-facing wrapper: masks (B, H, W) in {0,1}, imgs (B, H, W, 3) in [0,1]."""
    s3 = masks_to_tensor(masks)
    x = torch.from_numpy(np.asarray(imgs, dtype=np.float32))
    if x.ndim == 3:
        x = x[None]
    x = x.permute(0, 3, 1, 2)
    model.eval()
    with torch.no_grad():
        return model(s3, x)


def image_pyramid(img: np.ndarray, scales: int) -> list[np.ndarray]:
    """Level 1 is the image itself; each further level is the previous one
    mean-pooled 2x2 (edge-replicated to even size, so sizes follow
    ceil(H / 2^(k-1)))."""
    if scales < 1:
        raise ValueError("scales must be >= 1")
    levels = [np.asarray(img, dtype=np.float32)]
    for _ in range(scales - 1):
        prev = levels[-1]
        h, w = prev.shape[:2]
        if h % 2 or w % 2:
            pad_h, pad_w = h % 2, w % 2
            if prev.ndim == 3:
                prev = np.pad(prev, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
            else:
                prev = np.pad(prev, ((0, pad_h), (0, pad_w)), mode="edge")
        pooled = (prev[0::2, 0::2] + prev[0::2, 1::2] + prev[1::2, 0::2] + prev[1::2, 1::2]) / 4.0
        levels.append(pooled)
    return levels
