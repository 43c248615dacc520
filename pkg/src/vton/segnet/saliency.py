"""Binarization and saliency evaluation metrics (MAE, max F-beta)."""

from __future__ import annotations

import numpy as np


def binarize(prob_map: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """value >= threshold -> 1 else 0; ties go to foreground."""
    return (np.asarray(prob_map) >= threshold).astype(np.float32)


def metric_mae(pred: np.ndarray, gt: np.ndarray) -> float:
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    return float(np.mean(np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64))))


def metric_max_fbeta(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 0.3) -> float:
    """Max over 256 evenly spaced thresholds of the F-beta of (pred >= t)
    against gt; degenerate precision/recall contribute 0."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    gt_pos = np.asarray(gt) == 1
    if not gt_pos.any():
        raise ValueError("ground truth has no positive pixels")
    p = np.asarray(pred, dtype=np.float64).ravel()
    g = gt_pos.ravel()
    best = 0.0
    for t in np.linspace(0.0, 1.0, 256):
        sel = p >= t
        tp = np.count_nonzero(sel & g)
        fp = np.count_nonzero(sel & ~g)
        fn = np.count_nonzero(~sel & g)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        denom = beta_sq * precision + recall
        f = (1 + beta_sq) * precision * recall / denom if denom > 0 else 0.0
        best = max(best, f)
    return best


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a1, b1 = np.asarray(a) == 1, np.asarray(b) == 1
    union = np.count_nonzero(a1 | b1)
    if union == 0:
        return 1.0
    return np.count_nonzero(a1 & b1) / union
