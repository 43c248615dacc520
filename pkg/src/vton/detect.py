"""Person detection front end: letterboxing, NMS, cropping, paste-back.

The detector itself is a pluggable backend. Backends receive the letterboxed
model input and report boxes in that input's coordinate system; this module
owns the exact coordinate mapping back to the source image, the confidence
filter, greedy NMS, and the max-detection cap.

Built-in backends:
  * ``stub`` — fixed detections, for tests,
  * ``fullframe`` — one whole-image detection with score 1.0, the practical
    default when no external pretrained detector is wired in.
An adapter for an external detector can be registered at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .imgbuf import resize_image


class DetectError(ValueError):
    pass


class BackendUnavailable(DetectError):
    """Requested detector backend is not registered."""


@dataclass(frozen=True)
class Detection:
    box: tuple[float, float, float, float]  # x1, y1, x2, y2
    score: float
    class_label: str = "person"

    def __post_init__(self):
        x1, y1, x2, y2 = self.box
        if not (x1 < x2 and y1 < y2):
            raise DetectError(f"degenerate box {self.box}")
        if not 0.0 <= self.score <= 1.0:
            raise DetectError(f"score {self.score} outside [0, 1]")


@dataclass
class DetectorConfig:
    input_size: int = 640
    confidence_threshold: float = 0.25
    nms_iou_threshold: float = 0.45
    max_detections: int = 10
    backend: str = "fullframe"


@dataclass(frozen=True)
class Letterbox:
    """Aspect-preserving resize plus centered padding to a square input,
    with the exact inverse coordinate mapping."""

    scale: float
    pad_x: float
    pad_y: float
    size: int
    src_h: int
    src_w: int

    @classmethod
    def fit(cls, src_h: int, src_w: int, size: int) -> "Letterbox":
        scale = size / max(src_h, src_w)
        new_h, new_w = round(src_h * scale), round(src_w * scale)
        return cls(
            scale=scale,
            pad_x=(size - new_w) / 2.0,
            pad_y=(size - new_h) / 2.0,
            size=size,
            src_h=src_h,
            src_w=src_w,
        )

    def apply(self, img: np.ndarray) -> np.ndarray:
        new_h, new_w = round(self.src_h * self.scale), round(self.src_w * self.scale)
        resized = resize_image(img, new_h, new_w)
        out = np.full((self.size, self.size, img.shape[2]), 0.5, dtype=np.float32)
        top, left = int(round(self.pad_y)), int(round(self.pad_x))
        out[top : top + new_h, left : left + new_w] = resized
        return out

    def to_model(self, box):
        x1, y1, x2, y2 = box
        return (
            x1 * self.scale + self.pad_x,
            y1 * self.scale + self.pad_y,
            x2 * self.scale + self.pad_x,
            y2 * self.scale + self.pad_y,
        )

    def to_source(self, box):
        x1, y1, x2, y2 = box
        return (
            (x1 - self.pad_x) / self.scale,
            (y1 - self.pad_y) / self.scale,
            (x2 - self.pad_x) / self.scale,
            (y2 - self.pad_y) / self.scale,
        )


@dataclass
class CropRegion:
    source_box: tuple[int, int, int, int]
    crop: np.ndarray
    source_size: tuple[int, int]  # (h, w)


class DetectorBackend(Protocol):
    def infer(self, model_input: np.ndarray) -> list[Detection]: ...


class StubBackend:
    """Returns preconfigured detections (in model-input coordinates)."""

    def __init__(self, detections: list[Detection]):
        self.detections = list(detections)

    @classmethod
    def from_source_boxes(cls, boxes, scores, src_h, src_w, input_size=640, class_label="person"):
        lb = Letterbox.fit(src_h, src_w, input_size)
        dets = [
            Detection(box=lb.to_model(b), score=s, class_label=class_label) for b, s in zip(boxes, scores)
        ]
        return cls(dets)

    def infer(self, model_input: np.ndarray) -> list[Detection]:
        return list(self.detections)


class FullFrameBackend:
    """One detection covering the whole model input."""

    def infer(self, model_input: np.ndarray) -> list[Detection]:
        h, w = model_input.shape[:2]
        return [Detection(box=(0.0, 0.0, float(w), float(h)), score=1.0)]


_BACKENDS: dict[str, Callable[[], DetectorBackend]] = {
    "fullframe": FullFrameBackend,
}


def register_backend(name: str, factory: Callable[[], DetectorBackend]) -> None:
    _BACKENDS[name] = factory


def create_backend(name: str) -> DetectorBackend:
    if name not in _BACKENDS:
        raise BackendUnavailable(
            f"detector backend '{name}' is not registered (available: {sorted(_BACKENDS)})"
        )
    return _BACKENDS[name]()


def iou(a, b) -> float:
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    ix = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def nms(dets: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy score-descending suppression; every surviving pair has
    IoU <= iou_threshold."""
    ordered = sorted(dets, key=lambda d: -d.score)
    kept: list[Detection] = []
    for det in ordered:
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept


def detect_persons(img: np.ndarray, cfg: DetectorConfig, backend: DetectorBackend | None = None) -> list[Detection]:
    """Letterbox, run the backend, map boxes to source coordinates, filter,
    suppress, cap, and sort by descending score."""
    if backend is None:
        backend = create_backend(cfg.backend)
    h, w = img.shape[:2]
    lb = Letterbox.fit(h, w, cfg.input_size)
    raw = backend.infer(lb.apply(img))
    persons = []
    for det in raw:
        if det.class_label != "person" or det.score < cfg.confidence_threshold:
            continue
        x1, y1, x2, y2 = lb.to_source(det.box)
        x1, x2 = max(0.0, x1), min(float(w), x2)
        y1, y2 = max(0.0, y1), min(float(h), y2)
        if x1 >= x2 or y1 >= y2:
            continue
        persons.append(Detection(box=(x1, y1, x2, y2), score=det.score, class_label=det.class_label))
    survivors = nms(persons, cfg.nms_iou_threshold)
    return survivors[: cfg.max_detections]


def crop_person(img: np.ndarray, det: Detection, margin: float = 0.1) -> CropRegion:
    """Expand the box by margin * side on each edge, clamp, extract pixels."""
    h, w = img.shape[:2]
    x1, y1, x2, y2 = det.box
    mh, mw = margin * (y2 - y1), margin * (x2 - x1)
    ix1 = max(0, int(round(x1 - mw)))
    iy1 = max(0, int(round(y1 - mh)))
    ix2 = min(w, int(round(x2 + mw)))
    iy2 = min(h, int(round(y2 + mh)))
    return CropRegion(source_box=(ix1, iy1, ix2, iy2), crop=img[iy1:iy2, ix1:ix2].copy(), source_size=(h, w))


def paste_back(canvas: np.ndarray, region: CropRegion, patch: np.ndarray) -> np.ndarray:
    """Replace the canvas pixels inside the region's source box with the patch."""
    x1, y1, x2, y2 = region.source_box
    if patch.shape[:2] != (y2 - y1, x2 - x1):
        raise DetectError(
            f"patch shape {patch.shape[:2]} does not match region {(y2 - y1, x2 - x1)}"
        )
    out = canvas.copy()
    out[y1:y2, x1:x2] = patch
    return out
