"""Segmentation training loss: binary cross-entropy summed over all six side
maps and the fused map, each term mean-reduced over pixels, with equal
weights. Probabilities are clamped to [1e-7, 1 - 1e-7] so the loss stays
finite at exact 0/1 predictions.
"""

from __future__ import annotations

import numpy as np
import torch

_EPS = 1e-7


class LossError(ValueError):
    pass


def bce_map(prob: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    p = prob.clamp(_EPS, 1.0 - _EPS)
    return -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p)).mean()


def seg_loss_torch(maps: list[torch.Tensor], target: torch.Tensor):
    """maps = [fused, side1..side6]; returns (total, per-map breakdown)."""
    parts = [bce_map(m, target) for m in maps]
    return sum(parts), parts


def seg_loss(output, target: np.ndarray):
    """Numpy-facing wrapper over SaliencyOutput; validates target binarity."""
    values = np.unique(target)
    if not np.all(np.isin(values, (0, 1))):
        raise LossError("target mask must be binary")
    t = torch.from_numpy(np.asarray(target, dtype=np.float32))
    if t.ndim == 2:
        t = t[None]
    maps = [torch.from_numpy(np.asarray(output.fused, dtype=np.float32))] + [
        torch.from_numpy(np.asarray(m, dtype=np.float32)) for m in output.side_maps
    ]
    maps = [m if m.ndim == 3 else m[None] for m in maps]
    total, parts = seg_loss_torch(maps, t)
    return float(total), [float(p) for p in parts]
