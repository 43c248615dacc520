"""End-to-end try-on orchestration.

For every detected person, in descending score order: crop with margin,
resize the crop to the segmentation input size, take the fused saliency
map, binarize, resize the mask to the translation input size, generate
cloth, resize cloth and mask back to crop size, alpha-composite, and paste
the crop back. Pixels outside every (feathered) mask region are bit-exact
copies of the input.

Models come from a bundle directory::

    bundle/
      manifest.json        {"version": 1, "garments": [{"id", "checkpoint"}],
                            "segmentation": ..., "detector": backend id}
      segmentation.ckpt.npz
      <garment>.ckpt.npz
      previews/<garment>.png
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .detect import CropRegion, Detection, DetectorConfig, create_backend, crop_person, detect_persons, paste_back
from .imgbuf import resize_image, resize_mask
from .segnet import binarize, u2net_forward
from .segnet.train import load_seg_model
from .transnet import generator_forward
from .transnet.train import load_gan_generator

BUNDLE_VERSION = 1


class PipelineError(ValueError):
    pass


class NoPersonFound(PipelineError):
    pass


class UnknownGarment(KeyError):
    pass


@dataclass
class PipelineConfig:
    detect: DetectorConfig = field(default_factory=DetectorConfig)
    threshold: float = 0.5
    feather: float = 2.0
    margin: float = 0.1
    fallback: str = "error"  # or "passthrough"


@dataclass
class PersonRecord:
    detection: Detection
    source_box: tuple[int, int, int, int]
    mask: np.ndarray  # crop-sized binary mask
    cloth: np.ndarray  # crop-sized generated cloth


@dataclass
class TryOnResult:
    output: np.ndarray
    persons: list[PersonRecord]
    timings: dict[str, float]


class Bundle:
    def __init__(self, root: Path, version: int, seg_model, garments: dict, detector_backend: str):
        self.root = root
        self.version = version
        self.seg_model = seg_model
        self.garments = garments  # id -> generator
        self.detector_backend = detector_backend

    @property
    def garment_ids(self) -> list[str]:
        return sorted(self.garments)

    def preview_path(self, garment_id: str) -> Path:
        return self.root / "previews" / f"{garment_id}.png"


def load_bundle(path) -> Bundle:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise PipelineError(f"bundle manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    if doc.get("version") != BUNDLE_VERSION:
        raise PipelineError(f"unsupported bundle version {doc.get('version')} (expected {BUNDLE_VERSION})")
    seg_path = root / doc["segmentation"]
    if not seg_path.exists():
        raise PipelineError(f"bundle missing segmentation checkpoint: {seg_path}")
    seg_model = load_seg_model(seg_path)
    garments = {}
    for entry in doc["garments"]:
        ckpt = root / entry["checkpoint"]
        if not ckpt.exists():
            raise PipelineError(f"bundle missing garment checkpoint: {ckpt}")
        garments[entry["id"]] = load_gan_generator(ckpt)
    return Bundle(
        root=root,
        version=doc["version"],
        seg_model=seg_model,
        garments=garments,
        detector_backend=doc.get("detector", "fullframe"),
    )


def overlay(base: np.ndarray, cloth: np.ndarray, mask: np.ndarray, feather: float = 0.0) -> np.ndarray:
    """Alpha-composite cloth over base; alpha is the mask blurred with a
    Gaussian of width ``feather`` px (0 means the hard mask)."""
    if base.shape[:2] != cloth.shape[:2] or base.shape[:2] != mask.shape[:2]:
        raise PipelineError("overlay inputs are not spatially aligned")
    alpha = np.asarray(mask, dtype=np.float64)
    if feather > 0:
        alpha = np.clip(gaussian_filter(alpha, sigma=feather), 0.0, 1.0)
    alpha = alpha[:, :, None]
    out = alpha * np.asarray(cloth, dtype=np.float64) + (1.0 - alpha) * np.asarray(base, dtype=np.float64)
    return out.astype(np.float32)


def tryon(
    img: np.ndarray,
    garment_id: str,
    bundle: Bundle,
    cfg: PipelineConfig | None = None,
    backend=None,
) -> TryOnResult:
    cfg = cfg or PipelineConfig()
    if garment_id not in bundle.garments:
        raise UnknownGarment(garment_id)
    generator = bundle.garments[garment_id]
    seg_size = bundle.seg_model.spec.input_size
    gan_size = getattr(generator, "input_size", None)

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if backend is None:
        backend = create_backend(bundle.detector_backend or cfg.detect.backend)
    detections = detect_persons(img, cfg.detect, backend)
    timings["detect"] = time.perf_counter() - t0

    if not detections:
        if cfg.fallback == "passthrough":
            return TryOnResult(output=img.copy(), persons=[], timings=timings)
        raise NoPersonFound("no person detected")

    output = img.copy()
    persons: list[PersonRecord] = []
    t_seg = t_gan = t_comp = 0.0
    for det in detections:
        region = crop_person(output, det, margin=cfg.margin)
        ch, cw = region.crop.shape[:2]
        if ch < 2 or cw < 2:
            continue

        t = time.perf_counter()
        seg_in = resize_image(region.crop, seg_size, seg_size)
        saliency = u2net_forward(bundle.seg_model, seg_in[None])
        mask_model = binarize(saliency.fused[0], cfg.threshold)
        t_seg += time.perf_counter() - t

        t = time.perf_counter()
        size = gan_size or seg_size
        gan_mask = resize_mask(mask_model, size, size) if size != seg_size else mask_model
        cloth_model = generator_forward(generator, gan_mask[None])[0]
        t_gan += time.perf_counter() - t

        t = time.perf_counter()
        mask_crop = resize_mask(mask_model, ch, cw)
        cloth_crop = resize_image(cloth_model, ch, cw)
        composited = overlay(region.crop, cloth_crop, mask_crop, feather=cfg.feather)
        output = paste_back(output, region, composited)
        t_comp += time.perf_counter() - t

        persons.append(
            PersonRecord(detection=det, source_box=region.source_box, mask=mask_crop, cloth=cloth_crop)
        )
    timings["segment"] = t_seg
    timings["translate"] = t_gan
    timings["composite"] = t_comp
    return TryOnResult(output=output, persons=persons, timings=timings)


def init_bundle(path, detector: str = "fullframe") -> Path:
    """Create (or keep) a bundle directory with an empty manifest."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        manifest_path.write_text(
            json.dumps({"version": BUNDLE_VERSION, "segmentation": None, "garments": [], "detector": detector}, indent=2)
        )
    return root


def _update_manifest(root: Path, mutate) -> None:
    manifest_path = root / "manifest.json"
    doc = json.loads(manifest_path.read_text())
    mutate(doc)
    manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True))


def set_bundle_segmentation(path, checkpoint_name: str) -> None:
    _update_manifest(Path(path), lambda doc: doc.update(segmentation=checkpoint_name))


def add_bundle_garment(path, garment_id: str, checkpoint_name: str) -> None:
    root = Path(path)

    def mutate(doc):
        doc["garments"] = [g for g in doc["garments"] if g["id"] != garment_id]
        doc["garments"].append({"id": garment_id, "checkpoint": checkpoint_name})

    _update_manifest(root, mutate)
    write_garment_preview(root, garment_id, checkpoint_name)


def write_garment_preview(root: Path, garment_id: str, checkpoint_name: str, size: int | None = None) -> Path:
    """Render the garment generator on a canonical torso-like mask."""
    from .imgbuf import save_image

    generator = load_gan_generator(Path(root) / checkpoint_name)
    size = size or getattr(generator, "input_size", None) or 64
    mask = np.zeros((size, size), dtype=np.float32)
    q = size // 4
    mask[q : size - q, q : size - q] = 1.0
    cloth = generator_forward(generator, mask[None])[0]
    preview_dir = Path(root) / "previews"
    preview_dir.mkdir(exist_ok=True)
    out = preview_dir / f"{garment_id}.png"
    save_image(out, cloth)
    return out


def make_demo_bundle(
    path,
    garment_ids=("g1",),
    seed: int = 0,
    seg_spec=None,
    gspec=None,
    dspec=None,
    image_size: int = 64,
    detector: str = "fullframe",
) -> Path:
    """Assemble a complete bundle from freshly initialized (untrained) models;
    deterministic in seed. Used by tests and as a quick-start scaffold."""
    from .segnet import U2NetSpec, build_model
    from .segnet.train import save_seg_checkpoint
    from .transnet import DiscriminatorSpec, GeneratorSpec, build_discriminator, build_generator
    from .transnet.train import save_gan_checkpoint

    root = init_bundle(path, detector=detector)
    seg_spec = seg_spec or U2NetSpec.small()
    gspec = gspec or GeneratorSpec.small()
    dspec = dspec or DiscriminatorSpec(num_scales=3, layers=3, base_channels=8)

    seg_model = build_model(seg_spec, seed=seed)
    save_seg_checkpoint(root / "segmentation.ckpt.npz", seg_model, step=0)
    set_bundle_segmentation(root, "segmentation.ckpt.npz")
    for i, gid in enumerate(garment_ids):
        generator = build_generator(gspec, seed=seed + 1 + i)
        discriminator = build_discriminator(dspec, seed=seed + 100 + i)
        name = f"{gid}.ckpt.npz"
        save_gan_checkpoint(root / name, generator, discriminator, gspec, dspec, step=0, image_size=image_size)
        add_bundle_garment(root, gid, name)
    return root
