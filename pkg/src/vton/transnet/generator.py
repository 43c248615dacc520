"""Mask-to-cloth generators.

The primary architecture is coarse-to-fine: a global encoder-resblocks-
decoder backbone plus a chain of local enhancer stages. Each enhancer
consumes the input at twice the previous stage's resolution, downsamples it
once, fuses with the previous stage's feature map by elementwise sum,
refines through residual blocks, and upsamples — so every enhancer doubles
the output height and width relative to the stage below it. A U-shaped
skip-connection generator is available behind the ``arch`` flag.

Outputs are tanh-activated ([-1, 1] internally); generator_forward maps
them to [0, 1] at the module boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    base_channels: int = 64
    global_downsamples: int = 4
    residual_blocks: int = 9
    enhancers: int = 0
    output_channels: int = 3
    arch: str = "coarse_to_fine"  # or "unet"

    @classmethod
    def full(cls) -> "GeneratorSpec":
        return cls(base_channels=64, global_downsamples=4, residual_blocks=9, enhancers=0)

    @classmethod
    def small(cls) -> "GeneratorSpec":
        """Desk-scale configuration for 64x64 training."""
        return cls(base_channels=16, global_downsamples=2, residual_blocks=3, enhancers=0)

    def to_dict(self):
        return {
            "base_channels": self.base_channels,
            "global_downsamples": self.global_downsamples,
            "residual_blocks": self.residual_blocks,
            "enhancers": self.enhancers,
            "output_channels": self.output_channels,
            "arch": self.arch,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @property
    def size_divisor(self) -> int:
        return 2 ** (self.global_downsamples + self.enhancers)


class ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.block = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, 3),
            nn.InstanceNorm2d(channels, affine=True),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, 3),
            nn.InstanceNorm2d(channels, affine=True),
        )

    def forward(self, x):
        return x + self.block(x)


class GlobalBackbone(nn.Module):
    """Front convolution, strided downsampling, residual blocks, transposed
    upsampling; emits base-width features at its input resolution."""

    def __init__(self, in_channels, base, downsamples, blocks):
        super().__init__()
        layers = [
            nn.ReflectionPad2d(3),
            nn.Conv2d(in_channels, base, 7),
            nn.InstanceNorm2d(base, affine=True),
            nn.ReLU(inplace=True),
        ]
        ch = base
        for _ in range(downsamples):
            layers += [
                nn.Conv2d(ch, ch * 2, 3, stride=2, padding=1),
                nn.InstanceNorm2d(ch * 2, affine=True),
                nn.ReLU(inplace=True),
            ]
            ch *= 2
        layers += [ResidualBlock(ch) for _ in range(blocks)]
        for _ in range(downsamples):
            layers += [
                nn.ConvTranspose2d(ch, ch // 2, 3, stride=2, padding=1, output_padding=1),
                nn.InstanceNorm2d(ch // 2, affine=True),
                nn.ReLU(inplace=True),
            ]
            ch //= 2
        self.model = nn.Sequential(*layers)

    def forward(self, x):
        return self.model(x)


class RgbHead(nn.Module):
    def __init__(self, channels, out_channels):
        super().__init__()
        self.model = nn.Sequential(nn.ReflectionPad2d(3), nn.Conv2d(channels, out_channels, 7), nn.Tanh())

    def forward(self, x):
        return self.model(x)


class EnhancerStage(nn.Module):
    """Front-end downsampling convolutions whose output is summed with the
    previous stage's features, then residual refinement and 2x upsampling."""

    def __init__(self, in_channels, channels, blocks):
        super().__init__()
        self.front = nn.Sequential(
            nn.ReflectionPad2d(3),
            nn.Conv2d(in_channels, channels, 7),
            nn.InstanceNorm2d(channels, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels * 2, 3, stride=2, padding=1),
            nn.InstanceNorm2d(channels * 2, affine=True),
            nn.ReLU(inplace=True),
        )
        self.back = nn.Sequential(
            *[ResidualBlock(channels * 2) for _ in range(blocks)],
            nn.ConvTranspose2d(channels * 2, channels, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(channels, affine=True),
            nn.ReLU(inplace=True),
        )

    def forward(self, x, deeper_features):
        return self.back(self.front(x) + deeper_features)


def _downsample2(x: torch.Tensor) -> torch.Tensor:
    h, w = x.shape[2:]
    if h % 2 or w % 2:
        x = F.pad(x, (0, w % 2, 0, h % 2), mode="replicate")
    return F.avg_pool2d(x, 2)


class CoarseToFineGenerator(nn.Module):
    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        e = spec.enhancers
        global_base = spec.base_channels * (2**e)
        self.global_net = GlobalBackbone(3, global_base, spec.global_downsamples, spec.residual_blocks)
        self.global_rgb = RgbHead(global_base, spec.output_channels)
        local_blocks = max(1, spec.residual_blocks // 3)
        self.enhancer_stages = nn.ModuleList(
            EnhancerStage(3, spec.base_channels * 2 ** (e - n), local_blocks) for n in range(1, e + 1)
        )
        self.final_rgb = RgbHead(spec.base_channels, spec.output_channels) if e else None

    def forward(self, x, global_only: bool = False):
        self._check_size(x, global_only)
        if global_only or not self.enhancer_stages:
            return self.global_rgb(self.global_net(x))
        pyramid = [x]
        for _ in range(len(self.enhancer_stages)):
            pyramid.append(_downsample2(pyramid[-1]))
        features = self.global_net(pyramid[-1])
        for n, stage in enumerate(self.enhancer_stages, start=1):
            features = stage(pyramid[len(self.enhancer_stages) - n], features)
        return self.final_rgb(features)

    def _check_size(self, x, global_only):
        divisor = 2**self.spec.global_downsamples
        if not global_only:
            divisor = self.spec.size_divisor
        h, w = x.shape[2:]
        if h % divisor or w % divisor:
            raise GeneratorError(f"input {h}x{w} not divisible by {divisor}")


class UNetGenerator(nn.Module):
    """Skip-connection encoder-decoder alternative."""

    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        depth = spec.global_downsamples + spec.enhancers
        ch = spec.base_channels
        self.inc = nn.Sequential(nn.Conv2d(3, ch, 3, padding=1), nn.InstanceNorm2d(ch, affine=True), nn.ReLU(True))
        downs, ups = [], []
        chans = [ch]
        for _ in range(depth):
            nxt = min(ch * 2, 8 * spec.base_channels)
            downs.append(
                nn.Sequential(
                    nn.Conv2d(ch, nxt, 4, stride=2, padding=1),
                    nn.InstanceNorm2d(nxt, affine=True),
                    nn.LeakyReLU(0.2, True),
                )
            )
            ch = nxt
            chans.append(ch)
        for i in range(depth):
            skip = chans[depth - 1 - i]
            ups.append(
                nn.Sequential(
                    nn.ConvTranspose2d(ch, skip, 4, stride=2, padding=1),
                    nn.InstanceNorm2d(skip, affine=True),
                    nn.ReLU(True),
                )
            )
            ch = skip * 2  # skip concat
        self.downs = nn.ModuleList(downs)
        self.ups = nn.ModuleList(ups)
        self.out = nn.Sequential(nn.Conv2d(ch, spec.output_channels, 3, padding=1), nn.Tanh())

    def forward(self, x, global_only: bool = False):
        h, w = x.shape[2:]
        if h % self.spec.size_divisor or w % self.spec.size_divisor:
            raise GeneratorError(f"input {h}x{w} not divisible by {self.spec.size_divisor}")
        skips = []
        h_ = self.inc(x)
        for down in self.downs:
            skips.append(h_)
            h_ = down(h_)
        for up in self.ups:
            h_ = torch.cat([up(h_), skips.pop()], dim=1)
        return self.out(h_)


def build_generator(spec: GeneratorSpec, seed: int | None = None) -> nn.Module:
    if seed is not None:
        torch.manual_seed(seed)
    if spec.arch == "coarse_to_fine":
        return CoarseToFineGenerator(spec)
    if spec.arch == "unet":
        return UNetGenerator(spec)
    raise GeneratorError(f"unknown generator arch '{spec.arch}'")


def masks_to_tensor(masks: np.ndarray) -> torch.Tensor:
    """Replicate a {0,1} mask batch across 3 channels as NCHW."""
    arr = np.asarray(masks, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim == 3:
        arr = np.repeat(arr[:, :, :, None], 3, axis=3)
    return torch.from_numpy(np.ascontiguousarray(arr)).permute(0, 3, 1, 2)


def generator_forward(model: nn.Module, masks: np.ndarray) -> np.ndarray:
    """Run the generator on a mask batch; returns (B, H, W, 3) in [0, 1]."""
    x = masks_to_tensor(masks)
    model.eval()
    with torch.no_grad():
        out = model(x)
    return ((out + 1.0) / 2.0).clamp(0, 1).permute(0, 2, 3, 1).numpy()
