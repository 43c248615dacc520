"""Residual U-blocks: the building unit of the segmentation network.

A block of height L computes H(x) = F1(x) + U(F1(x)): an input convolution
producing an intermediate feature map, plus an inner U-shaped
encoder-decoder over it, summed residually. The dilated variant replaces
down/up-sampling with progressively dilated convolutions so every internal
layer keeps the input resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class RSUSpec:
    height: int
    c_in: int
    c_mid: int
    c_out: int
    dilated: bool = False

    def __post_init__(self):
        if self.height < 2:
            raise ConfigurationError(f"RSU height must be >= 2, got {self.height}")
        if min(self.c_in, self.c_mid, self.c_out) < 1:
            raise ConfigurationError("channel counts must be >= 1")

    def to_dict(self):
        return {
            "height": self.height,
            "c_in": self.c_in,
            "c_mid": self.c_mid,
            "c_out": self.c_out,
            "dilated": self.dilated,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class ConvBlock(nn.Module):
    """3x3 convolution + batch norm + ReLU, with optional dilation."""

    def __init__(self, c_in, c_out, dilation=1):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, 3, padding=dilation, dilation=dilation)
        self.bn = nn.BatchNorm2d(c_out)

    def forward(self, x):
        return F.relu(self.bn(self.conv(x)))


def _upsample_like(src, target):
    if src.shape[2:] == target.shape[2:]:
        return src
    return F.interpolate(src, size=target.shape[2:], mode="bilinear", align_corners=False)


class RSU(nn.Module):
    """Parametric residual U-block.

    Non-dilated: L-1 encoder convolutions with 2x2 max-pooling between them,
    a dilation-2 bottom convolution, and L-1 decoder convolutions consuming
    concatenated skip features with bilinear upsampling on the way out.
    Dilated: same topology with dilation 2^(i-1) at depth i and no
    resolution changes anywhere.
    """

    def __init__(self, spec: RSUSpec):
        super().__init__()
        self.spec = spec
        L = spec.height
        dil = (lambda i: 2 ** (i - 1)) if spec.dilated else (lambda i: 1)
        self.conv_in = ConvBlock(spec.c_in, spec.c_out)
        self.enc = nn.ModuleList(
            [ConvBlock(spec.c_out if i == 1 else spec.c_mid, spec.c_mid, dilation=dil(i)) for i in range(1, L)]
        )
        self.bottom = ConvBlock(spec.c_mid, spec.c_mid, dilation=2 ** (L - 1) if spec.dilated else 2)
        self.dec = nn.ModuleList(
            [
                ConvBlock(spec.c_mid * 2, spec.c_out if i == 1 else spec.c_mid, dilation=dil(i))
                for i in range(L - 1, 0, -1)
            ]
        )

    def forward(self, x):
        if x.shape[1] != self.spec.c_in:
            raise ConfigurationError(f"expected {self.spec.c_in} input channels, got {x.shape[1]}")
        if not self.spec.dilated and min(x.shape[2:]) < 2 ** (self.spec.height - 1):
            raise ConfigurationError(
                f"spatial size {tuple(x.shape[2:])} too small for non-dilated height {self.spec.height} "
                f"(needs >= {2 ** (self.spec.height - 1)})"
            )
        hx_in = self.conv_in(x)
        skips = []
        h = hx_in
        for i, enc in enumerate(self.enc):
            h = enc(h)
            skips.append(h)
            if not self.spec.dilated and i < len(self.enc) - 1:
                h = F.max_pool2d(h, 2, stride=2, ceil_mode=True)
        h = self.bottom(h)
        for dec, skip in zip(self.dec, reversed(skips)):
            h = dec(torch.cat((_upsample_like(h, skip), skip), dim=1))
        return _upsample_like(h, hx_in) + hx_in
