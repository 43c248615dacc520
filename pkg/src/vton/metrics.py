"""Image-quality and distribution metrics: SSIM, MS-SSIM, FID, KID.

The distribution metrics operate on pluggable embeddings. Built-in
embedders are deliberately weight-free ("pixels" and a fixed-seed random
convolutional projector); absolute FID/KID values are embedder-dependent,
so numbers computed here are comparable only within one embedder, never
against results produced with a pretrained inception-style extractor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import convolve2d

from .imgbuf import resize_image, to_gray

# standard published five-scale weights, normalized to sum exactly to 1
_RAW_MS_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MS_SSIM_WEIGHTS = tuple(w / sum(_RAW_MS_WEIGHTS) for w in _RAW_MS_WEIGHTS)


class MetricError(ValueError):
    pass


@dataclass
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    ms_weights: tuple[float, ...] = MS_SSIM_WEIGHTS

    def __post_init__(self):
        if self.window % 2 != 1:
            raise MetricError("window size must be odd")
        if abs(sum(self.ms_weights) - 1.0) > 1e-6:
            raise MetricError("ms_weights must sum to 1")


def _gauss_kernel(window: int, sigma: float) -> np.ndarray:
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _local_stats(x: np.ndarray, y: np.ndarray, cfg: SsimConfig):
    k = _gauss_kernel(cfg.window, cfg.sigma)
    kernel = np.outer(k, k)

    def filt(a):
        return convolve2d(a, kernel, mode="valid")

    mu_x, mu_y = filt(x), filt(y)
    sigma_x = filt(x * x) - mu_x**2
    sigma_y = filt(y * y) - mu_y**2
    sigma_xy = filt(x * y) - mu_x * mu_y
    return mu_x, mu_y, sigma_x, sigma_y, sigma_xy


def ssim_components(x: np.ndarray, y: np.ndarray, cfg: SsimConfig | None = None):
    """Per-window luminance and contrast-structure maps (the two SSIM factors)."""
    cfg = cfg or SsimConfig()
    if x.shape != y.shape:
        raise MetricError(f"shape mismatch {x.shape} vs {y.shape}")
    gx = to_gray(x).astype(np.float64)
    gy = to_gray(y).astype(np.float64)
    if min(gx.shape) < cfg.window:
        raise MetricError(f"image smaller than the {cfg.window}px window")
    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2
    mu_x, mu_y, sigma_x, sigma_y, sigma_xy = _local_stats(gx, gy, cfg)
    luminance = (2 * mu_x * mu_y + c1) / (mu_x**2 + mu_y**2 + c1)
    cs = (2 * sigma_xy + c2) / (sigma_x + sigma_y + c2)
    return luminance, cs


def ssim(x: np.ndarray, y: np.ndarray, cfg: SsimConfig | None = None) -> float:
    """Mean local SSIM over Gaussian-windowed statistics; range [-1, 1]."""
    luminance, cs = ssim_components(x, y, cfg)
    return float(np.mean(luminance * cs))


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    img = img[: h - h % 2, : w - w % 2]
    return (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2]) / 4.0


def ms_ssim(x: np.ndarray, y: np.ndarray, cfg: SsimConfig | None = None) -> float:
    """Multi-scale SSIM: contrast-structure at every scale, luminance at the
    coarsest, each raised to its weight; factor-2 average-pool downsampling."""
    cfg = cfg or SsimConfig()
    scales = len(cfg.ms_weights)
    gx = to_gray(x).astype(np.float64)
    gy = to_gray(y).astype(np.float64)
    if min(gx.shape) < 2 ** (scales - 1) * cfg.window:
        raise MetricError(
            f"min dimension {min(gx.shape)} too small for {scales} scales with window {cfg.window}"
        )
    value = 1.0
    for level, weight in enumerate(cfg.ms_weights):
        luminance, cs = ssim_components(gx, gy, cfg)
        mcs = max(float(np.mean(cs)), 0.0)
        if level == scales - 1:
            ml = max(float(np.mean(luminance)), 0.0)
            value *= (ml * mcs) ** weight if weight != 0 else 1.0
        else:
            value *= mcs**weight if weight != 0 else 1.0
            gx, gy = _downsample2(gx), _downsample2(gy)
    return value


@dataclass
class EmbeddingSet:
    features: np.ndarray  # (n, d)
    embedder_id: str

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise MetricError("features must be a 2-D (n, d) matrix")
        if not np.all(np.isfinite(self.features)):
            raise MetricError("features contain non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _sqrt_trace_of_product(sigma_a: np.ndarray, sigma_b: np.ndarray) -> float:
    """Tr((Sa Sb)^{1/2}) via eigendecompositions of symmetrized matrices,
    clamping negative eigenvalues to zero; robust for rank-deficient
    desk-scale covariances."""
    wa, va = np.linalg.eigh((sigma_a + sigma_a.T) / 2.0)
    root_a = (va * np.sqrt(np.clip(wa, 0.0, None))) @ va.T
    inner = root_a @ sigma_b @ root_a
    wi = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    return float(np.sum(np.sqrt(np.clip(wi, 0.0, None))))


def fid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Frechet distance between Gaussian fits of the two embedding sets,
    clamped to >= 0."""
    if a.d != b.d:
        raise MetricError(f"dimension mismatch {a.d} vs {b.d}")
    if a.n < 2 or b.n < 2:
        raise MetricError("need at least 2 samples per set for covariances")
    mu_a, mu_b = a.features.mean(axis=0), b.features.mean(axis=0)
    sigma_a = np.cov(a.features, rowvar=False, ddof=1).reshape(a.d, a.d)
    sigma_b = np.cov(b.features, rowvar=False, ddof=1).reshape(b.d, b.d)
    mean_term = float(np.sum((mu_a - mu_b) ** 2))
    value = mean_term + np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * _sqrt_trace_of_product(sigma_a, sigma_b)
    return max(value, 0.0)


def _poly_kernel(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    return (u @ v.T / d + 1.0) ** 3


def _mmd2_unbiased(x: np.ndarray, y: np.ndarray) -> float:
    m, n = x.shape[0], y.shape[0]
    kxx = _poly_kernel(x, x)
    kyy = _poly_kernel(y, y)
    kxy = _poly_kernel(x, y)
    sum_xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    sum_yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(sum_xx + sum_yy - 2.0 * kxy.mean())


def kid(
    a: EmbeddingSet,
    b: EmbeddingSet,
    subset_size: int | None = None,
    subsets: int = 10,
    seed: int = 0,
) -> float:
    """Mean over random subsets of the unbiased MMD^2 estimator with the
    cubic polynomial kernel k(u, v) = (u.v/d + 1)^3. May be slightly
    negative by construction of the unbiased estimator."""
    if a.d != b.d:
        raise MetricError(f"dimension mismatch {a.d} vs {b.d}")
    m = min(a.n, b.n, subset_size if subset_size is not None else min(a.n, 100))
    if m < 2:
        raise MetricError("subset size must be >= 2")
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(subsets):
        ia = rng.choice(a.n, size=m, replace=False)
        ib = rng.choice(b.n, size=m, replace=False)
        values.append(_mmd2_unbiased(a.features[ia], b.features[ib]))
    return float(np.mean(values))


# --- embedders -------------------------------------------------------------

_RANDCONV_SEED = 0x5EED


def _embed_pixels(imgs: list[np.ndarray]) -> np.ndarray:
    feats = []
    for img in imgs:
        if img.ndim == 2:
            img = img[:, :, None]
        if img.shape[:2] != (16, 16):
            img = resize_image(img, 16, 16)
        feats.append(np.asarray(img, dtype=np.float64).ravel())
    return np.stack(feats)


class _RandConvProjector:
    """Two fixed-seed convolution layers with ReLU, channel-mean pooling,
    and a fixed random projection to d dimensions."""

    def __init__(self, d: int = 64):
        rng = np.random.default_rng(_RANDCONV_SEED)
        self.w1 = rng.normal(0, 0.5, (8, 3, 3, 3))
        self.w2 = rng.normal(0, 0.5, (16, 8, 3, 3))
        self.proj = rng.normal(0, 1.0, (16, d)) / np.sqrt(16)
        self.d = d

    def __call__(self, img: np.ndarray) -> np.ndarray:
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        if img.shape[2] == 1:
            img = np.repeat(img, 3, axis=2)
        x = resize_image(img, 32, 32).astype(np.float64)
        x = np.stack([self._conv(x, self.w1[k]) for k in range(8)], axis=2)
        x = np.maximum(x, 0.0)[::2, ::2]
        x = np.stack([self._conv(x, self.w2[k]) for k in range(16)], axis=2)
        x = np.maximum(x, 0.0)
        pooled = x.mean(axis=(0, 1))
        return pooled @ self.proj

    @staticmethod
    def _conv(x: np.ndarray, w: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[:2])
        for c in range(x.shape[2]):
            out += convolve2d(x[:, :, c], w[c], mode="same")
        return out


_projectors: dict[int, _RandConvProjector] = {}


def _embed_randconv(imgs: list[np.ndarray], d: int = 64) -> np.ndarray:
    if d not in _projectors:
        _projectors[d] = _RandConvProjector(d)
    proj = _projectors[d]
    return np.stack([proj(img) for img in imgs])


_EMBEDDERS: dict[str, Callable] = {
    "pixels": _embed_pixels,
    "randconv": _embed_randconv,
}


def register_embedder(name: str, fn: Callable) -> None:
    """Adapter slot: register a pretrained inception-like extractor here."""
    _EMBEDDERS[name] = fn


def embed(imgs: list[np.ndarray], embedder_id: str = "randconv", **opts) -> EmbeddingSet:
    if embedder_id not in _EMBEDDERS:
        raise MetricError(f"embedder '{embedder_id}' not registered (available: {sorted(_EMBEDDERS)})")
    feats = _EMBEDDERS[embedder_id](imgs, **opts)
    return EmbeddingSet(features=feats, embedder_id=embedder_id)
