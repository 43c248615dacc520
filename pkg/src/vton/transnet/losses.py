"""Adversarial, feature-matching, and perceptual objectives.

gan_loss vanilla is the sampled log form of the min-max game (binary
cross-entropy of sigmoid(logits) against the real/fake target); the
least-squares flavor regresses raw logits to 1/0. fm_loss is the per-layer
mean absolute distance between real and generated discriminator features
(the final logit map is excluded), summed over layers and scales.
perceptual_loss is a weighted sum of per-layer mean L1 distances under a
pluggable feature extractor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .discriminator import FeatureStack


class GanLossError(ValueError):
    pass


def gan_loss(logits: torch.Tensor, target_is_real: bool, flavor: str = "vanilla") -> torch.Tensor:
    if not torch.isfinite(logits).all():
        raise GanLossError("non-finite logits")
    target = torch.ones_like(logits) if target_is_real else torch.zeros_like(logits)
    if flavor == "vanilla":
        return F.binary_cross_entropy_with_logits(logits, target)
    if flavor == "least_squares":
        return F.mse_loss(logits, target)
    raise GanLossError(f"unknown adversarial flavor '{flavor}'")


def fm_loss(real_stacks: Sequence[FeatureStack], fake_stacks: Sequence[FeatureStack]) -> torch.Tensor:
    if len(real_stacks) != len(fake_stacks):
        raise GanLossError("stack count mismatch")
    total = None
    for real, fake in zip(real_stacks, fake_stacks):
        if len(real.features) != len(fake.features):
            raise GanLossError("feature layer count mismatch")
        for fr, ff in zip(real.features, fake.features):
            term = (fr - ff).abs().sum() / fr.numel()
            total = term if total is None else total + term
    return total if total is not None else torch.zeros(())


class FeatureExtractor(Protocol):
    weights: Sequence[float]

    def layers(self, x: torch.Tensor) -> list[torch.Tensor]: ...


class IdentityExtractor:
    """Single layer: the image itself. Makes the perceptual term a direct
    mean-L1 pull toward the target."""

    weights = (1.0,)

    def layers(self, x: torch.Tensor) -> list[torch.Tensor]:
        return [x]


class RandConvExtractor:
    """Fixed-seed random convolutional feature pyramid; deterministic across
    runs, no pretrained weights."""

    def __init__(self, channels: int = 3, widths=(8, 16, 32), seed: int = 0x9E1):
        gen = torch.Generator().manual_seed(seed)
        self.convs = []
        c_in = channels
        for w in widths:
            conv = torch.nn.Conv2d(c_in, w, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.3)
                conv.bias.zero_()
            conv.requires_grad_(False)
            self.convs.append(conv)
            c_in = w
        self.weights = tuple(1.0 for _ in widths)

    def layers(self, x: torch.Tensor) -> list[torch.Tensor]:
        out = []
        h = x
        for conv in self.convs:
            h = F.leaky_relu(conv(h), 0.2)
            out.append(h)
        return out


_EXTRACTORS = {
    "identity": IdentityExtractor,
    "randconv": RandConvExtractor,
}


def register_extractor(name: str, factory) -> None:
    """Adapter slot for a pretrained perceptual network."""
    _EXTRACTORS[name] = factory


def get_extractor(name: str) -> FeatureExtractor:
    if name not in _EXTRACTORS:
        raise GanLossError(f"perceptual extractor '{name}' not registered (available: {sorted(_EXTRACTORS)})")
    return _EXTRACTORS[name]()


def perceptual_loss(extractor: FeatureExtractor, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    fx, fy = extractor.layers(x), extractor.layers(y)
    total = None
    for w, a, b in zip(extractor.weights, fx, fy):
        term = w * (a - b).abs().mean()
        total = term if total is None else total + term
    return total


@dataclass
class GanTerms:
    """Per-scale adversarial values: generator-side and both discriminator sides."""

    g_adv: list
    d_real: list
    d_fake: list


def total_objective(gan_terms: GanTerms, fm_terms, perc_term, lambda_fm: float, lambda_perc: float):
    """Combine components into (generator objective, discriminator objective).

    Generator: sum over scales of the adversarial term plus lambda-weighted
    feature-match and perceptual terms. Discriminator: sum over scales of
    real-as-real plus fake-as-fake.
    """
    g = sum(gan_terms.g_adv) + lambda_fm * sum(_as_list(fm_terms)) + lambda_perc * perc_term
    d = sum(gan_terms.d_real) + sum(gan_terms.d_fake)
    return g, d


def _as_list(x):
    if isinstance(x, (list, tuple)):
        return list(x)
    return [x]
