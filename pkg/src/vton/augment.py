"""Paired geometric augmentation.

Five transform kinds: perspective, piecewise_affine, elastic, shear, scale.
Every kind is realized as an inverse map (output pixel -> source location)
sampled with scipy.ndimage.map_coordinates, bilinear for imagery and nearest
for masks, so a sampled transform applies the exact same point mapping to an
image and its mask. Out-of-source pixels are filled with 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

KINDS = ("perspective", "piecewise_affine", "elastic", "shear", "scale")


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class GeometricTransform:
    kind: str
    params: dict[str, Any]
    seed: int


@dataclass
class AugmentConfig:
    """Per-kind enable flags and parameter ranges.

    Defaults keep silhouettes plausible: corner jitter <= 8% of the side,
    4x4 piecewise-affine grid with <= 5% jitter, elastic alpha <= 10 px with
    sigma = 6 px, shear <= 12 degrees, scale in [0.85, 1.15].
    """

    perspective: bool = True
    perspective_max_shift: float = 0.08
    piecewise_affine: bool = True
    piecewise_grid: int = 4
    piecewise_max_shift: float = 0.05
    elastic: bool = True
    elastic_alpha: float = 10.0
    elastic_sigma: float = 6.0
    shear: bool = True
    shear_max_degrees: float = 12.0
    scale: bool = True
    scale_range: tuple[float, float] = (0.85, 1.15)
    copies: int = 4  # augmented copies per source pair

    def enabled_kinds(self) -> list[str]:
        return [k for k in KINDS if getattr(self, k)]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["scale_range"] = list(self.scale_range)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AugmentConfig":
        kw = dict(d)
        if "scale_range" in kw:
            kw["scale_range"] = tuple(kw["scale_range"])
        return cls(**kw)


def sample_transform(config: AugmentConfig, seed: int) -> GeometricTransform:
    """Pick an enabled kind and sample its parameters, deterministically in seed."""
    kinds = config.enabled_kinds()
    if not kinds:
        raise AugmentError("all augmentation kinds are disabled")
    rng = np.random.default_rng(np.random.SeedSequence([0xA06, seed]))
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "perspective":
        shifts = rng.uniform(-config.perspective_max_shift, config.perspective_max_shift, (4, 2))
        params = {"corner_shifts": shifts.tolist()}
    elif kind == "piecewise_affine":
        g = config.piecewise_grid
        disp = rng.uniform(-config.piecewise_max_shift, config.piecewise_max_shift, (g + 1, g + 1, 2))
        params = {"grid": g, "displacements": disp.tolist()}
    elif kind == "elastic":
        params = {
            "alpha": float(rng.uniform(0, config.elastic_alpha)),
            "sigma": config.elastic_sigma,
            "field_seed": int(rng.integers(2**31 - 1)),
        }
    elif kind == "shear":
        params = {"degrees": float(rng.uniform(-config.shear_max_degrees, config.shear_max_degrees))}
    else:
        lo, hi = config.scale_range
        params = {"sx": float(rng.uniform(lo, hi)), "sy": float(rng.uniform(lo, hi))}
    return GeometricTransform(kind=kind, params=params, seed=seed)


def _perspective_map(shifts: np.ndarray, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Homography sending each output corner to the source corner displaced
    by the sampled fraction of the image side."""
    side = float(max(h, w))
    out_corners = np.array([[0, 0], [w, 0], [w, h], [0, h]], dtype=np.float64)
    src_corners = out_corners + np.asarray(shifts, dtype=np.float64) * side
    # solve 8x8 system for H with H[2,2] = 1, mapping output -> source
    a, b = [], []
    for (ox, oy), (sx, sy) in zip(out_corners, src_corners):
        a.append([ox, oy, 1, 0, 0, 0, -sx * ox, -sx * oy])
        a.append([0, 0, 0, ox, oy, 1, -sy * ox, -sy * oy])
        b.extend([sx, sy])
    hvec = np.linalg.solve(np.asarray(a), np.asarray(b))
    H = np.append(hvec, 1.0).reshape(3, 3)
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64) + 0.5, np.arange(h, dtype=np.float64) + 0.5)
    denom = H[2, 0] * cc + H[2, 1] * rr + H[2, 2]
    src_x = (H[0, 0] * cc + H[0, 1] * rr + H[0, 2]) / denom
    src_y = (H[1, 0] * cc + H[1, 1] * rr + H[1, 2]) / denom
    return src_y - 0.5, src_x - 0.5


def _piecewise_affine_map(grid: int, disp: np.ndarray, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Displacement interpolated barycentrically over a triangulated control
    grid (each cell split along its TL-BR diagonal), so the map is affine on
    every triangle and continuous across edges."""
    side = float(max(h, w))
    d = np.asarray(disp, dtype=np.float64) * side  # (g+1, g+1, 2) in px, indexed [row, col]
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    gx = cc / max(w - 1, 1) * grid
    gy = rr / max(h - 1, 1) * grid
    c0 = np.clip(gx.astype(int), 0, grid - 1)
    r0 = np.clip(gy.astype(int), 0, grid - 1)
    u = gx - c0
    v = gy - r0
    d00 = d[r0, c0]
    d10 = d[r0, c0 + 1]
    d01 = d[r0 + 1, c0]
    d11 = d[r0 + 1, c0 + 1]
    lower = u >= v  # triangle (0,0)-(1,0)-(1,1); upper is (0,0)-(0,1)-(1,1)
    wl = np.where(lower[..., None], 1 - u[..., None], 1 - v[..., None])
    wa = np.where(lower[..., None], (u - v)[..., None], (v - u)[..., None])
    wb = np.where(lower[..., None], v[..., None], u[..., None])
    dmid = np.where(lower[..., None], d10, d01)
    dxy = wl * d00 + wa * dmid + wb * d11
    src_x = cc - dxy[..., 0]
    src_y = rr - dxy[..., 1]
    return src_y, src_x


def _elastic_map(alpha: float, sigma: float, field_seed: int, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(field_seed)
    dx = gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma)
    dy = gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma)
    mag = np.sqrt(dx**2 + dy**2).max()
    if mag > 0:
        # normalize so the largest displacement length is exactly alpha px
        dx *= alpha / mag
        dy *= alpha / mag
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    return rr + dy, cc + dx


def _shear_map(degrees: float, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.tan(np.deg2rad(degrees))
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    src_x = cc - t * (rr - cy)
    return rr.copy(), src_x


def _scale_map(sx: float, sy: float, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    cc, rr = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    return cy + (rr - cy) / sy, cx + (cc - cx) / sx


def inverse_map(t: GeometricTransform, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Source (row, col) coordinate arrays for every output pixel."""
    p = t.params
    if t.kind == "perspective":
        return _perspective_map(np.asarray(p["corner_shifts"]), h, w)
    if t.kind == "piecewise_affine":
        return _piecewise_affine_map(p["grid"], np.asarray(p["displacements"]), h, w)
    if t.kind == "elastic":
        return _elastic_map(p["alpha"], p["sigma"], p["field_seed"], h, w)
    if t.kind == "shear":
        return _shear_map(p["degrees"], h, w)
    if t.kind == "scale":
        return _scale_map(p["sx"], p["sy"], h, w)
    raise AugmentError(f"unknown transform kind '{t.kind}'")


def apply_transform(t: GeometricTransform, img: np.ndarray, interpolation: str = "bilinear") -> np.ndarray:
    """Warp an image (or mask) with the transform's inverse map.

    Output has the source's height/width; locations that map outside the
    source are filled with 0.
    """
    if interpolation not in ("bilinear", "nearest"):
        raise AugmentError(f"unknown interpolation '{interpolation}'")
    order = 1 if interpolation == "bilinear" else 0
    h, w = img.shape[:2]
    src_r, src_c = inverse_map(t, h, w)
    coords = np.stack([src_r, src_c])
    if img.ndim == 2:
        return map_coordinates(img.astype(np.float64), coords, order=order, mode="constant", cval=0.0).astype(
            img.dtype if img.dtype.kind == "f" else np.float32
        )
    out = np.empty_like(img, dtype=np.float32)
    for ch in range(img.shape[2]):
        out[:, :, ch] = map_coordinates(
            img[:, :, ch].astype(np.float64), coords, order=order, mode="constant", cval=0.0
        )
    return out


def augment_pair(t: GeometricTransform, image: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Warp image (bilinear) and mask (nearest) with the same parameters."""
    warped_img = apply_transform(t, image, "bilinear")
    warped_mask = apply_transform(t, mask, "nearest")
    return warped_img, warped_mask
