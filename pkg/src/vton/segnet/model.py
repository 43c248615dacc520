"""Nested-U segmentation network.

Eleven residual U-blocks: a six-stage encoder whose last two stages are
dilated, a five-stage decoder consuming concatenated upsampled-deeper and
mirror-encoder features, and a fusion head. Pooling happens only after
encoder stages 1-3, so stages 4-6 share one resolution. Each of the five
decoder stages plus the last encoder stage emits a side probability map
(3x3 convolution + sigmoid, upsampled to input resolution); the fused map
mixes the concatenated side maps with a 1x1 convolution + sigmoid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import RSU, ConfigurationError, RSUSpec, _upsample_like


@dataclass(frozen=True)
class U2NetSpec:
    encoder_stages: tuple[RSUSpec, ...]
    decoder_stages: tuple[RSUSpec, ...]
    side_channels: int = 1
    input_size: int = 320

    def __post_init__(self):
        if len(self.encoder_stages) != 6 or len(self.decoder_stages) != 5:
            raise ConfigurationError("need 6 encoder and 5 decoder stages (11 residual U-blocks)")
        if not (self.encoder_stages[4].dilated and self.encoder_stages[5].dilated):
            raise ConfigurationError("encoder stages 5 and 6 must be dilated")

    @classmethod
    def full(cls) -> "U2NetSpec":
        return cls(
            encoder_stages=(
                RSUSpec(7, 3, 32, 64),
                RSUSpec(6, 64, 32, 128),
                RSUSpec(5, 128, 64, 256),
                RSUSpec(4, 256, 128, 512),
                RSUSpec(4, 512, 256, 512, dilated=True),
                RSUSpec(4, 512, 256, 512, dilated=True),
            ),
            decoder_stages=(
                RSUSpec(4, 1024, 256, 512, dilated=True),
                RSUSpec(4, 1024, 128, 256),
                RSUSpec(5, 512, 64, 128),
                RSUSpec(6, 256, 32, 64),
                RSUSpec(7, 128, 16, 64),
            ),
            input_size=320,
        )

    @classmethod
    def small(cls) -> "U2NetSpec":
        """Quarter-width configuration for desk-scale training and tests."""
        return cls(
            encoder_stages=(
                RSUSpec(7, 3, 8, 16),
                RSUSpec(6, 16, 8, 32),
                RSUSpec(5, 32, 16, 64),
                RSUSpec(4, 64, 32, 128),
                RSUSpec(4, 128, 64, 128, dilated=True),
                RSUSpec(4, 128, 64, 128, dilated=True),
            ),
            decoder_stages=(
                RSUSpec(4, 256, 64, 128, dilated=True),
                RSUSpec(4, 256, 32, 64),
                RSUSpec(5, 128, 16, 32),
                RSUSpec(6, 64, 8, 16),
                RSUSpec(7, 32, 4, 16),
            ),
            input_size=64,
        )

    def to_dict(self):
        return {
            "encoder_stages": [s.to_dict() for s in self.encoder_stages],
            "decoder_stages": [s.to_dict() for s in self.decoder_stages],
            "side_channels": self.side_channels,
            "input_size": self.input_size,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            encoder_stages=tuple(RSUSpec.from_dict(s) for s in d["encoder_stages"]),
            decoder_stages=tuple(RSUSpec.from_dict(s) for s in d["decoder_stages"]),
            side_channels=d.get("side_channels", 1),
            input_size=d.get("input_size", 320),
        )


@dataclass
class SaliencyOutput:
    fused: np.ndarray  # (B, H, W) probabilities
    side_maps: list[np.ndarray] = field(default_factory=list)  # 6 maps, each (B, H, W)


class BodySegNet(nn.Module):
    def __init__(self, spec: U2NetSpec):
        super().__init__()
        self.spec = spec
        self.encoders = nn.ModuleList(RSU(s) for s in spec.encoder_stages)
        self.decoders = nn.ModuleList(RSU(s) for s in spec.decoder_stages)
        side_sources = [spec.decoder_stages[4 - i].c_out for i in range(5)] + [spec.encoder_stages[5].c_out]
        self.side_convs = nn.ModuleList(nn.Conv2d(c, spec.side_channels, 3, padding=1) for c in side_sources)
        self.fuse_conv = nn.Conv2d(6 * spec.side_channels, spec.side_channels, 1)
        # the fusion layer sees bounded probabilities, so a near-zero init
        # would need thousands of Adam steps to saturate; start it as a
        # calibrated average of the side maps (0.5 inputs still map to 0.5)
        nn.init.constant_(self.fuse_conv.weight, 4.0)
        nn.init.constant_(self.fuse_conv.bias, -12.0)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Returns [fused, side1..side6] probability maps at input resolution."""
        enc_feats = []
        h = x
        for i, encoder in enumerate(self.encoders):
            h = encoder(h)
            enc_feats.append(h)
            if i < 3:
                h = F.max_pool2d(h, 2, stride=2, ceil_mode=True)
        dec_feats = []
        h = enc_feats[5]
        for i, decoder in enumerate(self.decoders):
            mirror = enc_feats[4 - i]
            h = decoder(torch.cat((_upsample_like(h, mirror), mirror), dim=1))
            dec_feats.append(h)
        # side sources ordered shallow-to-deep: de1..de5 then enc6
        sources = [dec_feats[4], dec_feats[3], dec_feats[2], dec_feats[1], dec_feats[0], enc_feats[5]]
        sides = []
        for conv, feat in zip(self.side_convs, sources):
            prob = torch.sigmoid(conv(feat))
            sides.append(_upsample_like(prob, x))
        fused = torch.sigmoid(self.fuse_conv(torch.cat(sides, dim=1)))
        return [fused] + sides


def build_model(spec: U2NetSpec, seed: int | None = None) -> BodySegNet:
    if seed is not None:
        torch.manual_seed(seed)
    return BodySegNet(spec)


def _to_batch_tensor(imgs: np.ndarray) -> torch.Tensor:
    arr = np.asarray(imgs, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()


def u2net_forward(model: BodySegNet, imgs: np.ndarray, on_indivisible: str = "error") -> SaliencyOutput:
    """Run the network on a batch of HxWx3 images in [0, 1].

    Input height/width must be divisible by 32; on_indivisible selects
    whether to raise or bilinearly resize to the next multiple.
    """
    x = _to_batch_tensor(imgs)
    b, c, h, w = x.shape
    orig_hw = (h, w)
    if h % 32 or w % 32:
        if on_indivisible == "resize":
            h2, w2 = ((h + 31) // 32) * 32, ((w + 31) // 32) * 32
            x = F.interpolate(x, size=(h2, w2), mode="bilinear", align_corners=False)
        else:
            raise ConfigurationError(f"input size {h}x{w} not divisible by 32 (set on_indivisible='resize')")
    model.eval()
    with torch.no_grad():
        maps = model(x)
    if maps[0].shape[2:] != orig_hw:
        maps = [F.interpolate(m, size=orig_hw, mode="bilinear", align_corners=False) for m in maps]
    arrays = [m[:, 0].numpy() for m in maps]
    return SaliencyOutput(fused=arrays[0], side_maps=arrays[1:])


def rsu_forward(block: RSU, x: torch.Tensor) -> torch.Tensor:
    block.eval()
    with torch.no_grad():
        return block(x)
