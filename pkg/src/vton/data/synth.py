"""Deterministic synthetic dataset generator.

Each sample is a procedural person-like silhouette (torso blob, head, limbs)
over a smooth textured background, a binary mask covering the torso, and a
target image identical to the scene except that the torso region carries a
procedural striped cloth texture. Small GANs can overfit this geometry in
minutes, which is what the desk-scale training tests need.

The torso is stored as a polygon annotation and the mask is produced by
rasterizing it, so the annotation file is the single source of truth.
"""

from __future__ import annotations

import numpy as np

from ..imgbuf import from_uint8, to_uint8
from .annotations import PolygonAnnotation, PolygonShape, rasterize_mask, serialize_annotation
from .manifest import DatasetManifest, make_manifest, save_manifest

DEFAULT_LABEL = "upper_body"


def _background(rng: np.random.Generator, size: int) -> np.ndarray:
    rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = np.zeros((size, size, 3), dtype=np.float64)
    for ch in range(3):
        fr, fc = rng.uniform(0.5, 2.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        base = rng.uniform(0.25, 0.55)
        img[:, :, ch] = base + 0.12 * np.sin(2 * np.pi * (fr * rr + fc * cc) / size + phase)
    return np.clip(img, 0.0, 1.0)


def _torso_polygon(rng: np.random.Generator, size: int) -> list[tuple[float, float]]:
    cx = size * rng.uniform(0.45, 0.55)
    cy = size * rng.uniform(0.40, 0.50)
    hw = size * rng.uniform(0.13, 0.19)
    hh = size * rng.uniform(0.16, 0.22)
    pts = []
    for theta in np.linspace(0, 2 * np.pi, 20, endpoint=False):
        # superellipse exponent keeps the blob torso-like rather than lens-like
        x = cx + hw * np.sign(np.cos(theta)) * abs(np.cos(theta)) ** 0.7
        y = cy + hh * np.sign(np.sin(theta)) * abs(np.sin(theta)) ** 0.7
        pts.append((float(np.clip(x, 0, size)), float(np.clip(y, 0, size))))
    return pts


def _paint_person(img: np.ndarray, poly: np.ndarray, rng: np.random.Generator, size: int) -> None:
    rr, cc = np.meshgrid(np.arange(size) + 0.5, np.arange(size) + 0.5, indexing="ij")
    cx, cy = poly[:, 0].mean(), poly[:, 1].mean()
    hw = (poly[:, 0].max() - poly[:, 0].min()) / 2
    hh = (poly[:, 1].max() - poly[:, 1].min()) / 2

    skin = np.array([0.85, 0.65, 0.5]) + rng.uniform(-0.05, 0.05, 3)
    shirt = np.array([0.2, 0.3, 0.6]) + rng.uniform(-0.1, 0.1, 3)

    head_r = 0.45 * hw
    head = (cc - cx) ** 2 + (rr - (cy - hh - head_r * 1.1)) ** 2 <= head_r**2
    img[head] = skin

    arm_w = 0.3 * hw
    for side in (-1, 1):
        ax = cx + side * (hw + arm_w * 0.6)
        arm = (np.abs(cc - ax) <= arm_w) & (rr >= cy - hh * 0.8) & (rr <= cy + hh * 0.9)
        img[arm] = skin
    leg_w = 0.45 * hw
    for side in (-1, 1):
        lx = cx + side * leg_w * 0.75
        leg = (np.abs(cc - lx) <= leg_w * 0.5) & (rr >= cy + hh * 0.9) & (rr <= cy + hh * 2.4)
        img[leg] = np.clip(shirt * 0.6, 0, 1)


def _cloth_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Striped texture; geometry fixed per dataset so the mapping is learnable."""
    rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    angle = rng.uniform(0, np.pi)
    period = size * rng.uniform(0.08, 0.16)
    c1 = rng.uniform(0.55, 0.95, 3)
    c2 = rng.uniform(0.05, 0.45, 3)
    wave = 0.5 + 0.5 * np.sin(2 * np.pi * (np.cos(angle) * cc + np.sin(angle) * rr) / period)
    stripes = (wave > 0.5).astype(np.float64)
    cloth = stripes[:, :, None] * c1 + (1 - stripes[:, :, None]) * c2
    return np.clip(cloth, 0.0, 1.0)


def synth_sample(seed: int, index: int, size: int, label: str = DEFAULT_LABEL):
    """Build one sample; returns (image_u8, mask, target_u8, annotation)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    cloth_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC10]))

    img = _background(rng, size)
    poly = _torso_polygon(rng, size)
    poly_arr = np.asarray(poly)
    _paint_person(img, poly_arr, rng, size)

    ann = PolygonAnnotation(
        image_path=f"{index:04d}.png",
        image_height=size,
        image_width=size,
        shapes=(PolygonShape(label=label, points=tuple(poly)),),
    )
    mask = rasterize_mask(ann, label)

    shirt = np.array([0.35, 0.4, 0.55]) + rng.uniform(-0.08, 0.08, 3)
    img[mask == 1] = np.clip(shirt + rng.normal(0, 0.02, (int(mask.sum()), 3)), 0, 1)

    image_u8 = to_uint8(img)
    cloth_u8 = to_uint8(_cloth_texture(cloth_rng, size))
    target_u8 = image_u8.copy()
    target_u8[mask == 1] = cloth_u8[mask == 1]
    return image_u8, mask, target_u8, ann


def synth_dataset(
    root,
    n: int,
    size: int,
    seed: int,
    split_fraction: float = 0.8,
    label: str = DEFAULT_LABEL,
) -> DatasetManifest:
    """Materialize n paired samples under root and return the manifest.

    Fully deterministic in seed: the same call produces identical pixel data
    and an identical manifest.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if size < 32:
        raise ValueError("size must be >= 32")
    from pathlib import Path

    from PIL import Image as PILImage

    rootp = Path(root)
    rootp.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        image_u8, mask, target_u8, ann = synth_sample(seed, i, size, label)
        sid = f"{i:04d}"
        PILImage.fromarray(image_u8).save(rootp / f"{sid}.png")
        PILImage.fromarray(target_u8).save(rootp / f"{sid}_target.png")
        PILImage.fromarray((mask * 255).astype(np.uint8)).save(rootp / f"{sid}_mask.png")
        (rootp / f"{sid}.json").write_text(serialize_annotation(ann))
    manifest = make_manifest(rootp, split_fraction=split_fraction, seed=seed)
    save_manifest(manifest)
    return manifest


def load_pair(manifest: DatasetManifest, sample_id: str):
    """Load (image, mask, target) for a sample; mask/target fall back to rasterizing."""
    from ..imgbuf import load_image, load_mask
    from .annotations import parse_annotation

    ref = manifest.sample(sample_id)
    image = load_image(manifest.resolve(ref.image))
    if ref.mask is not None:
        mask = load_mask(manifest.resolve(ref.mask))
    else:
        ann = parse_annotation(manifest.resolve(ref.annotation).read_text())
        mask = rasterize_mask(ann, DEFAULT_LABEL)
    target = load_image(manifest.resolve(ref.target)) if ref.target is not None else None
    return image, mask, target


__all__ = ["synth_dataset", "synth_sample", "load_pair", "DEFAULT_LABEL"]
